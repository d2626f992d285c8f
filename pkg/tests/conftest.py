import numpy as np
import pytest

from conewave import cross_section, hankel, propagator


@pytest.fixture(scope="session")
def sphere4_modes():
    """S^3 with V0 = 0, eigenspaces 0 and 1: nu = 1 (one mode), nu = 2 (four modes)."""
    return cross_section.sphere_spectrum(4, 0.0, 1)


@pytest.fixture(scope="session")
def chi_data(sphere4_modes):
    return propagator.mode_data(sphere4_modes, 4, 0, "chi", 1.5, 1.0, 128)


@pytest.fixture(scope="session")
def out_grid():
    return hankel.make_log_grid(1e-2, 20.0, 64, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
