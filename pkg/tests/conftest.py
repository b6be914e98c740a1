import numpy as np
import pytest

from geounwrap.synth import DfpGeometry, FringeParams, SceneSpec


@pytest.fixture
def geom():
    return DfpGeometry(L=700.0, d=300.0, f_r=0.05)


@pytest.fixture
def small_scene():
    return SceneSpec(kind="gaussian-peaks", width=96, height=64, height_offset=5.0,
                     peaks=((48.0, 32.0, 20.0, 12.0),))


@pytest.fixture
def params():
    return FringeParams(period_px=18.0, A=128.0, B=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
