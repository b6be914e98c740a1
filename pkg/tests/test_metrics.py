import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geounwrap.metrics import evaluate, height_from_phase
from geounwrap.synth import DfpGeometry, phase_from_height

TWO_PI = 2 * math.pi


def brute_force_order_errors(est, truth, mask, piston):
    count = 0
    for r in range(est.shape[0]):
        for c in range(est.shape[1]):
            if mask[r, c] and abs(est[r, c] - piston - truth[r, c]) > math.pi:
                count += 1
    return count


def test_identity(rng):
    t = rng.normal(size=(8, 9))
    rep = evaluate(t.copy(), t)
    assert rep.rmse == 0 and rep.order_error_count == 0 and rep.piston_removed == 0
    assert rep.valid_pixel_count == 72


def test_pure_piston(rng):
    t = rng.normal(size=(8, 9))
    rep = evaluate(t + TWO_PI, t)
    assert rep.rmse == pytest.approx(0, abs=1e-12)
    assert rep.piston_removed == pytest.approx(TWO_PI)


def test_piston_off():
    t = np.zeros((3, 3))
    rep = evaluate(t + TWO_PI, t, remove_piston=False)
    assert rep.order_error_count == 9 and rep.piston_removed == 0


def test_single_order_error(rng):
    t = rng.normal(size=(10, 10))
    e = t.copy()
    e[3, 4] += TWO_PI
    rep = evaluate(e, t)
    assert rep.order_error_count == 1
    assert rep.order_error_rate == pytest.approx(0.01)
    assert rep.max_abs_err == pytest.approx(TWO_PI)


def test_empty_valid_set():
    with pytest.raises(ValueError, match="empty"):
        evaluate(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2), bool))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(np.zeros((2, 2)), np.zeros((2, 3)))


@given(st.integers(-40, 40))
def test_symmetric_piston_sign(m):
    rng = np.random.default_rng(abs(m))
    t = rng.normal(size=(6, 6))
    a = evaluate(t + TWO_PI * m, t)
    b = evaluate(t - TWO_PI * m, t)
    assert a.rmse == pytest.approx(b.rmse, abs=1e-12)
    assert a.order_error_count == b.order_error_count
    assert a.piston_removed == pytest.approx(-b.piston_removed)


@pytest.mark.parametrize("seed", range(10))
def test_order_errors_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    truth = rng.uniform(-20, 20, size=(32, 32))
    est = truth + TWO_PI * rng.integers(-1, 2, size=truth.shape) * (rng.uniform(size=truth.shape) < 0.1)
    est += rng.normal(0, 0.5, size=truth.shape) + TWO_PI * 3
    mask = rng.uniform(size=truth.shape) > 0.1
    rep = evaluate(est, truth, mask)
    assert rep.order_error_count == brute_force_order_errors(est, truth, mask, rep.piston_removed)
    assert rep.piston_removed / TWO_PI == round(rep.piston_removed / TWO_PI)
    assert 0 <= rep.order_error_rate <= 1


def test_height_from_phase_examples():
    g = DfpGeometry(L=700.0, d=300.0, f_r=0.05)
    assert height_from_phase(0.0, g) == 0.0
    assert float(height_from_phase(1.3659098493868667, g)) == pytest.approx(10.0, abs=1e-9)
    with pytest.raises(ValueError):
        height_from_phase(-TWO_PI * 0.05 * 300, g)


def test_height_round_trip():
    g = DfpGeometry()
    h = np.linspace(0, 50, 5001)
    assert np.max(np.abs(height_from_phase(phase_from_height(h, g), g) - h)) < 1e-9
