"""Exit criteria, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from geounwrap import experiments as ex
from geounwrap.demod import WrappedPhaseMap, four_step_phase
from geounwrap.metrics import evaluate, height_from_phase
from geounwrap.raster import read_image, read_phase_map, wrap_to_principal, write_image, write_phase_map
from geounwrap.spatial import itoh_orders, itoh_unwrap, itoh_unwrap_line, quality_guided_unwrap
from geounwrap.synth import (
    DfpGeometry,
    FringeParams,
    SceneSpec,
    carrier_phase,
    height_field,
    phase_from_height,
    render_fringes,
)
from geounwrap.temporal import (
    FrequencyPair,
    MinPhaseMap,
    dual_frequency_unwrap,
    geometric_unwrap,
    residual_correct,
)

pytestmark = pytest.mark.acceptance

TWO_PI = 2 * math.pi
B = 100.0
SEEDS = list(range(10))
RATIOS = [4.0, 8.0, 16.0, 32.0]
ROBUSTNESS_SIGMA = 0.02 * B
# criterion 4 only fixes "a" noise level; at 2% of B every cell is 0, so
# the trend is checked where the baseline actually fails
TREND_SIGMA = 0.05 * B


def record(criterion: str, ok: bool, detail: str):
    ACCEPTANCE_RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")
    assert ok, detail


def _geometric_run(scene, method="geometric", params=None):
    cfg = ex.PipelineConfig(scene=scene, method=method, fringe=params or FringeParams())
    sim = ex.simulate(cfg)
    result = ex.run_pipeline(sim.object_stack, sim.reference_stack, method=method,
                             truth=sim.true_phase, truth_mask=sim.mask)
    return sim, result


def test_c1_noiseless_exactness():
    scene = SceneSpec()  # 624 x 441 gaussian peaks
    h, _ = height_field(scene)
    dphi_max = float(np.nanmax(phase_from_height(h, DfpGeometry())))
    assert dphi_max < TWO_PI, "scene must sit inside the one-period window"
    t0 = time.perf_counter()
    sim, result = _geometric_run(scene)
    elapsed = time.perf_counter() - t0
    rep = result.reports["geometric"]
    ok = sim.true_phase.shape == (441, 624) and rep.max_abs_err < 1e-6 and elapsed < 5.0
    record("1", ok, f"max|err|={rep.max_abs_err:.2e} rad (<1e-6), runtime {elapsed:.2f}s (<5s), "
                    f"max dphi={dphi_max:.3f} rad")


def test_c2_residual_correction():
    scene = SceneSpec(peaks=((312.0, 220.0, 70.0, 60.0),))
    sim, result = _geometric_run(scene, method="geometric+correct")
    dphi = phase_from_height(sim.height, DfpGeometry())
    before = result.reports["geometric"]
    after = result.reports["geometric+corrected"]
    ok = (np.nanmax(dphi) > TWO_PI and before.order_error_count >= 1
          and after.order_error_count == 0 and after.max_abs_err < 1e-6)
    record("2", ok, f"uncorrected order errors={before.order_error_count} (>=1), corrected "
                    f"order errors={after.order_error_count} (=0), max|err|={after.max_abs_err:.2e} (<1e-6)")


@pytest.fixture(scope="module")
def robustness_rows():
    cfg = ex.PipelineConfig()
    t0 = time.perf_counter()
    rows = ex.run_sweep(cfg, [32.0], [ROBUSTNESS_SIGMA], SEEDS)
    return rows, time.perf_counter() - t0


def test_c3_robustness(robustness_rows):
    rows, elapsed = robustness_rows
    dual_beats = [r.dual_error_rate > r.geometric_error_rate for r in rows]
    geo_zero = sum(r.geometric_error_rate == 0 for r in rows)
    ok = all(dual_beats) and geo_zero >= 9 and elapsed < 60.0
    dual = ", ".join(f"{r.dual_error_rate:.2e}" for r in rows)
    geo = ", ".join(f"{r.geometric_error_rate:.2e}" for r in rows)
    record("3", ok, f"sigma=2%B ratio 32: dual > geometric on {sum(dual_beats)}/10 seeds (need 10), "
                    f"geometric zero on {geo_zero}/10 (need 9), runtime {elapsed:.1f}s (<60s); "
                    f"dual=[{dual}] geometric=[{geo}]")


def test_c4_monotone_trend():
    rows = ex.run_sweep(ex.PipelineConfig(), RATIOS, [TREND_SIGMA], SEEDS)
    medians = [float(np.median([r.dual_error_rate for r in rows if r.ratio == q])) for q in RATIOS]
    ok = all(a <= b for a, b in zip(medians, medians[1:]))
    record("4", ok, f"sigma=5%B dual median error rate by ratio {RATIOS}: "
                    + ", ".join(f"{m:.2e}" for m in medians) + " (non-decreasing)")


def _brute_force_count(est, truth, mask, piston):
    n = 0
    for r in range(est.shape[0]):
        for c in range(est.shape[1]):
            if mask[r, c] and abs(est[r, c] - piston - truth[r, c]) > math.pi:
                n += 1
    return n


def test_c5_oracle_equivalences():
    rng = np.random.default_rng(5)
    # (a) quality-guided on a single row == Itoh anchored at the seed, bit for bit
    a_ok = True
    for _ in range(200):
        n = int(rng.integers(1, 300))
        row = wrap_to_principal(np.cumsum(rng.uniform(-4, 4, size=n)))
        seed = int(rng.integers(0, n))
        w = WrappedPhaseMap(row[None], rng.uniform(0, 1, size=(1, n)), np.ones((1, n), bool))
        got = quality_guided_unwrap(w, seed=(0, seed)).phase[0]
        k = itoh_orders(row)
        a_ok &= np.array_equal(got, row + TWO_PI * (k - k[seed]))
        a_ok &= np.allclose(got - itoh_unwrap_line(row), (got - itoh_unwrap_line(row))[seed], atol=1e-9)

    # (b) both spatial methods on the smooth reference plane
    b_err = 0.0
    for sigma in (0.0, ROBUSTNESS_SIGMA):
        p = FringeParams(noise_sigma=sigma, rng_seed=11)
        wr = four_step_phase(render_fringes(None, p, "reference", shape=(441, 624)))
        d = itoh_unwrap(wr).phase - quality_guided_unwrap(wr).phase
        d -= TWO_PI * np.round(np.mean(d) / TWO_PI)
        b_err = max(b_err, float(np.max(np.abs(d))))

    # (c) metrics order-error count against a pixel loop on 32 x 32
    c_ok = True
    for s in range(20):
        r = np.random.default_rng(100 + s)
        truth = r.uniform(-30, 30, size=(32, 32))
        est = truth + TWO_PI * r.integers(-2, 3, size=truth.shape) * (r.uniform(size=truth.shape) < 0.15)
        est += r.normal(0, 0.6, size=truth.shape) + TWO_PI * int(r.integers(-5, 6))
        mask = r.uniform(size=truth.shape) > 0.1
        rep = evaluate(est, truth, mask)
        c_ok &= rep.order_error_count == _brute_force_count(est, truth, mask, rep.piston_removed)

    ok = bool(a_ok) and b_err < 1e-9 and bool(c_ok)
    record("5", ok, f"(a) single-row exact={bool(a_ok)}, (b) spatial agreement max {b_err:.1e} (<1e-9), "
                    f"(c) brute-force counts match={bool(c_ok)}")


def test_c6_algebraic_invariants(tmp_path):
    rng = np.random.default_rng(6)
    checks = {}

    phi_min = rng.uniform(-500, 500, size=(250, 400))
    phi_w = wrap_to_principal(rng.uniform(-100, 100, size=phi_min.shape))
    ones = np.ones(phi_min.shape, bool)
    geo = geometric_unwrap(WrappedPhaseMap(phi_w, np.ones_like(phi_w), ones), MinPhaseMap(phi_min, ones))
    rel = geo.phase - phi_min
    checks["window [0,2pi) on 1e5 px"] = bool(np.all(rel >= 0) and np.all(rel < TWO_PI))

    # congruence for every unwrapper
    p = FringeParams(noise_sigma=3.0, rng_seed=2)
    scene = SceneSpec(width=200, height=150, peaks=((100.0, 75.0, 70.0, 25.0),))
    h, mask = height_field(scene)
    dphi = phase_from_height(h, DfpGeometry())
    wo = four_step_phase(render_fringes(dphi, p))
    wr = four_step_phase(render_fringes(None, p, "reference", shape=h.shape))
    wl = four_step_phase(render_fringes(dphi / 8, FringeParams(period_px=200.0, noise_sigma=3.0, rng_seed=2), stream=2))
    ref = quality_guided_unwrap(wr)
    g = geometric_unwrap(wo, MinPhaseMap.from_unwrapped(ref))
    outputs = [
        (itoh_unwrap(wr), wr), (ref, wr), (g, wo), (residual_correct(g, wo.modulation), wo),
        (dual_frequency_unwrap(quality_guided_unwrap(wl), wo, FrequencyPair(1, 8)), wo),
    ]
    worst = max(float(np.max(np.abs(wrap_to_principal(u.phase[u.mask] - w.phase[u.mask])))) for u, w in outputs)
    checks["mod-2pi congruence"] = worst < 1e-9

    once = residual_correct(g, wo.modulation)
    twice = residual_correct(once, wo.modulation)
    checks["correction idempotent"] = np.array_equal(once.phase, twice.phase, equal_nan=True)

    phase = rng.uniform(-50, 50, size=(100, 120))
    stack = render_fringes(phase, FringeParams(period_px=1e12))
    rt = wrap_to_principal(four_step_phase(stack).phase - phase)
    checks["render/demod round trip"] = float(np.max(np.abs(rt))) < 1e-9

    heights = np.linspace(0, 50, 10001)
    g0 = DfpGeometry()
    checks["height round trip (mm)"] = float(np.max(np.abs(height_from_phase(phase_from_height(heights, g0), g0) - heights))) < 1e-9

    img = rng.integers(0, 256, size=(41, 63)).astype(float)
    write_image(img, tmp_path / "i.pgm")
    raw = (tmp_path / "i.pgm").read_bytes()
    write_image(read_image(tmp_path / "i.pgm"), tmp_path / "j.pgm")
    img16 = rng.integers(0, 65536, size=(17, 9)).astype(float)
    write_image(img16, tmp_path / "k.pgm", maxval=65535)
    grid = rng.normal(0, 100, size=(33, 47)).astype(np.float32).astype(float)
    gmask = rng.uniform(size=grid.shape) > 0.2
    write_phase_map(grid, gmask, tmp_path / "g.fphm")
    back, back_mask = read_phase_map(tmp_path / "g.fphm")
    checks["format round trips"] = (
        raw == (tmp_path / "j.pgm").read_bytes()
        and np.array_equal(read_image(tmp_path / "k.pgm"), img16)
        and np.array_equal(back_mask, gmask)
        and back[gmask].tobytes() == grid[gmask].tobytes()
    )
    ok = all(checks.values())
    record("6", ok, ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))


def test_c7_isolated_regions():
    # two overlapping holes cut the plate into a left and a right part
    scene = SceneSpec(kind="plate-with-holes", holes=((312.0, 100.0, 130.0), (312.0, 340.0, 130.0)),
                      plate_height=12.0)
    sim, result = _geometric_run(scene, method="geometric+correct")
    holes = ~sim.mask
    masks_ok = all(not m[holes].any() for m in
                   (result.wrapped_object.mask, result.unwrapped.mask, result.corrected.mask))
    # a spatial path from the left part never reaches the right part
    reach = quality_guided_unwrap(result.wrapped_object, seed=(220, 10)).mask
    separated = int((sim.mask & ~reach).sum())
    geo = result.reports["geometric"]
    cor = result.reports["geometric+corrected"]
    right = np.zeros_like(sim.mask)
    right[:, 450:] = True
    right_rep = evaluate(result.unwrapped, sim.true_phase, sim.mask & right)
    ok = (masks_ok and separated > 0 and geo.max_abs_err < 1e-6 and cor.max_abs_err < 1e-6
          and right_rep.max_abs_err < 1e-6 and right_rep.piston_removed == geo.piston_removed)
    record("7", ok, f"hole masks propagated={masks_ok}, {separated} px unreachable from the left part, "
                    f"max|err| geometric={geo.max_abs_err:.2e} corrected={cor.max_abs_err:.2e} (<1e-6), "
                    f"same piston on both sides={right_rep.piston_removed == geo.piston_removed}")
