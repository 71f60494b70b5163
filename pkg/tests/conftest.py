import numpy as np
import pytest

from gevreylab.grid import Field, Grid1D


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D(1024, 40.0)


@pytest.fixture(scope="session")
def medium_grid():
    return Grid1D(2048, 80.0)


@pytest.fixture(scope="session")
def gaussian(small_grid):
    return Field(small_grid, np.exp(-small_grid.points**2 / 2.0))


@pytest.fixture(scope="session")
def gaussian_medium(medium_grid):
    return Field(medium_grid, np.exp(-medium_grid.points**2 / 2.0))


@pytest.fixture(scope="session")
def sech_medium(medium_grid):
    return Field(medium_grid, 1.0 / np.cosh(medium_grid.points))


# The Galilean recursion J^{k+1}u = x J^k u + 2it d(J^k u) amplifies the FFT
# noise floor by roughly (2 t xi_max) per step, so identity checks use coarse
# grids whose xi_max matches the recursion's stability envelope.


@pytest.fixture(scope="session")
def j_grid():
    return Grid1D(128, 40.0)


@pytest.fixture(scope="session")
def j_gaussian(j_grid):
    return Field(j_grid, np.exp(-j_grid.points**2 / 2.0))


@pytest.fixture(scope="session")
def j_random_grid():
    return Grid1D(128, 48.0)
