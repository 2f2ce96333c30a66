import numpy as np
import pytest

from nonlocal_lp.grid import TorusGrid
from nonlocal_lp.measure import BoundedLevyMeasure, SphericalMeasure


@pytest.fixture
def grid1():
    return TorusGrid(1, 64)


@pytest.fixture
def grid2():
    return TorusGrid(2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pair_measure(alpha, weight=1.0, density=None):
    """Symmetric one-dimensional measure with atoms at +1 and -1."""
    sigma = SphericalMeasure.from_atoms([((1.0,), weight), ((-1.0,), weight)])
    return BoundedLevyMeasure.stable(alpha, sigma, density)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
