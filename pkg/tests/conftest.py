import numpy as np
import pytest

from periwave import Grid, MicroPotential, SolverConfig, continue_in_ell

SCHEDULE = (0.4, 0.2, 0.1, 0.05, 0.0)


@pytest.fixture(scope="session")
def silling():
    return MicroPotential.silling(1.0)


@pytest.fixture(scope="session")
def silling_sym():
    return MicroPotential.silling(1.0, symmetrized=True)


@pytest.fixture(scope="session")
def quadratic():
    return MicroPotential.quadratic(1.0)


@pytest.fixture(scope="session")
def wave_grid():
    return Grid.symmetric(40.0, 1.0 / 64)


@pytest.fixture(scope="session")
def continuation(silling_sym, wave_grid):
    """The K = 10 continuation run shared by solver, dynamics and acceptance tests."""
    cfg = SolverConfig(K=10.0, ell_schedule=SCHEDULE, tol_residual=1e-6)
    return continue_in_ell(cfg, silling_sym, wave_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
