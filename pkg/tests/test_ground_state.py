import math
import warnings

import numpy as np
import pytest

from spinsqueeze import bdg
from spinsqueeze.ground_state import (coupling_before_pulse, gamma_from_mu, gp_residual, mu_from_gamma,
                                      mu_tf_from_gn, n_atoms_from, number_derivatives, scattering_length,
                                      solve_gpe, thomas_fermi)
from spinsqueeze.lattice import LatticeGrid, PhysicalConfig, TrapSpec


def test_gamma_inversion_examples():
    # N = 1e6 atoms at mu = 10 hbar omega
    assert gamma_from_mu(1e6, 10.0) == pytest.approx(1e3 / (15e6 * math.sqrt(math.pi / 8)), rel=1e-14)
    assert gamma_from_mu(1e6, 10.0) == pytest.approx(1.064e-4, rel=1e-3)
    assert n_atoms_from(3e-3, 5.1) == pytest.approx(4.7e3, rel=0.01)
    assert mu_from_gamma(n_atoms_from(2e-4, 7.0), 2e-4) == pytest.approx(7.0, rel=1e-14)


def test_coupling_is_consistent_with_thomas_fermi():
    cfg = PhysicalConfig(n_atoms_from(1e-3, 6.0), 1e-3, 1.5)
    g0 = coupling_before_pulse(cfg)
    # TF: mu = (1/2)(15 g N / 4 pi)^(2/5)
    assert mu_tf_from_gn(g0 * cfg.n_atoms) == pytest.approx(6.0, rel=1e-12)
    # gamma^2 = rho(0) a^3 with rho(0) = mu / g
    a = scattering_length(1e-3, 6.0)
    assert (6.0 / g0) * a**3 == pytest.approx(1e-6, rel=1e-12)


def test_thomas_fermi_profile_edges():
    tf = thomas_fermi(PhysicalConfig(n_atoms_from(1e-3, 5.0), 1e-3, 1.5))
    assert tf.w(0.0) == pytest.approx(tf.mu_tf)
    assert tf.w(tf.radius) == pytest.approx(0.0, abs=1e-12)
    assert tf.w(2 * tf.radius) == 0.0


def test_ideal_limit_is_oscillator_ground_state():
    grid = LatticeGrid.cubic(16, 0.55)
    sol = solve_gpe(grid, TrapSpec(), 0.0)
    assert sol.mu_phi == pytest.approx(1.5, rel=1e-6)
    x, y, z = grid.mesh
    gauss = np.exp(-0.5 * (x * x + y * y + z * z))
    gauss /= math.sqrt(grid.norm(gauss))
    assert np.max(np.abs(sol.phi - gauss)) < 1e-4 * np.max(gauss)


def test_thomas_fermi_regime_mu_close_to_tf(small_trap_condensate):
    cfg = PhysicalConfig(n_atoms_from(3e-4, 5.1), 3e-4, 1.5)
    gn = coupling_before_pulse(cfg) * cfg.n_atoms
    grid = LatticeGrid.cubic(16, 0.6)
    sol = solve_gpe(grid, cfg.trap, gn, n_per_component=cfg.n_atoms)
    assert sol.residual < 1e-10
    assert gp_residual(grid, sol.phi, cfg.trap.on_grid(grid), gn, sol.mu_phi) < 1e-10
    # kinetic-energy correction pushes the numerical value a few percent above TF
    assert abs(sol.mu_phi / 5.1 - 1) < 0.06
    assert grid.norm(sol.phi) == pytest.approx(1.0, rel=1e-13)


def test_number_derivative_tf_scaling():
    grid = LatticeGrid.cubic(24, 0.5)
    n = 5e4
    gn = 2500.0
    dmu, dphi = number_derivatives(grid, TrapSpec(), gn, n)
    sol = solve_gpe(grid, TrapSpec(), gn, n_per_component=n)
    assert n * dmu == pytest.approx(0.4 * sol.mu_phi, rel=0.05)
    # norm conservation: d/dN <phi|phi> = 0
    assert abs(grid.dot(sol.phi, dphi)) < 1e-8 / n


def test_m_operator_identity(small_trap_condensate):
    grid, sol = small_trap_condensate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dmu, dphi = number_derivatives(grid, TrapSpec(), sol.gn, sol.n_per_component, base=sol)
    lhs = bdg.apply_m_operator(sol, TrapSpec(), -dphi)
    g = sol.g
    src = g * sol.phi**3
    src = src - sol.phi * grid.dot(sol.phi, src).real
    assert np.max(np.abs(lhs - src)) < 1e-6 * np.max(np.abs(src))


def test_ideal_limit_number_derivative_vanishes():
    grid = LatticeGrid.cubic(10, 0.7)
    dmu, _ = number_derivatives(grid, TrapSpec(), 0.0, 1e3)
    assert abs(dmu) < 1e-10


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        solve_gpe(LatticeGrid.cubic(6, 0.5), TrapSpec(), -1.0)
