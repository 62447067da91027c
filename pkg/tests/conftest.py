import numpy as np
import pytest

from nfse.dictionary import build_polar_dictionary, build_polar_grid
from nfse.geometry import build_geometry

# Reference setup used throughout: 8 subarrays of 32 antennas at 100 GHz,
# half-wavelength element spacing, 72 mm subarray spacing.
WAVELENGTH = 3e-3
M, N = 8, 32
D_ANT = WAVELENGTH / 2
D_SUB = N * D_ANT + 8 * WAVELENGTH


@pytest.fixture(scope="session")
def geometry():
    return build_geometry(M, N, D_ANT, D_SUB, WAVELENGTH)


@pytest.fixture(scope="session")
def polar_grid(geometry):
    return build_polar_grid(geometry, N, "uniform", r_step=5.0, r_min=5.0)


@pytest.fixture(scope="session")
def dictionary(geometry, polar_grid):
    return build_polar_dictionary(geometry, polar_grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250810)
