import warnings

import numpy as np
import pytest

from spinsqueeze.ground_state import n_atoms_from, solve_gpe
from spinsqueeze.lattice import LatticeGrid, PhysicalConfig, TrapSpec


@pytest.fixture(scope="session")
def small_trap_condensate():
    """gN = 100 in a 12^3 harmonic box, normalised to one particle."""
    grid = LatticeGrid.cubic(12, 0.75)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_gpe(grid, TrapSpec(), 100.0, n_per_component=1e4)
    return grid, sol


@pytest.fixture(scope="session")
def small_setup():
    """Complete pre-pulse setup on 8^3 used by the thermal and dynamics tests."""
    from spinsqueeze.simulation import prepare_simulation
    gamma = 3e-3
    config = PhysicalConfig(n_atoms_from(gamma, 5.0), gamma, 1.5, seed=11)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return prepare_simulation(config, points=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
