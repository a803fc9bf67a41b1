import numpy as np
import pytest

from lpscatter.grid import Potential, SpatialGrid


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid()


@pytest.fixture(scope="session")
def small_grid():
    return SpatialGrid(-20.0, 20.0, 513)


@pytest.fixture(scope="session")
def barrier():
    return Potential.square_barrier(1.0, 1.0)


@pytest.fixture(scope="session")
def gauss():
    return Potential.gaussian(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[cid].line())
