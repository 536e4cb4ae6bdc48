import numpy as np
import pytest
from hypothesis import settings

from thinch.geometry import SurfaceChart, ThicknessProfile

settings.register_profile("numerics", deadline=None, max_examples=25)
settings.load_profile("numerics")

# lines collected by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def torus():
    return SurfaceChart.torus(2.0, 1.0)


@pytest.fixture
def flat():
    return SurfaceChart.flat_sheet()


@pytest.fixture
def unit_profile():
    return ThicknessProfile()


@pytest.fixture
def wavy_profile():
    return ThicknessProfile.sinusoidal(amplitude=0.2, frequency=1, base=1.0, g0=-0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
