import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mlab.lattice import Grid, GridFunction

# grid construction dominates example time; no per-example deadline
settings.register_profile(
    "mlab", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("mlab")


@pytest.fixture
def grid1():
    return Grid(1, 8.0, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian(grid: Grid, sigma: float = 0.5) -> GridFunction:
    r = grid.radius()
    return GridFunction(grid, np.exp(-(r**2) / (2 * sigma**2)))


def indicator(grid: Grid, lo: float, hi: float) -> GridFunction:
    x = grid.coords()[0]
    return GridFunction(grid, ((x >= lo) & (x <= hi)).astype(float))
