import math

import numpy as np
import pytest

from spinsqueeze import bdg
from spinsqueeze.ground_state import solve_gpe
from spinsqueeze.lattice import LatticeGrid, TrapSpec
from spinsqueeze.thermal import InitialEnsembleSpec, ThermalSampler, trajectory_rng

HARMONIC = TrapSpec(kind="harmonic")


@pytest.fixture(scope="module")
def homogeneous():
    grid = LatticeGrid.cubic(6, 0.7)
    modes, report = bdg.compute_dk(grid, TrapSpec(kind="none"), 40.0, 1000.0)
    return grid, modes, report


@pytest.fixture(scope="module")
def trapped():
    grid = LatticeGrid.cubic(12, 0.75)
    modes, report = bdg.compute_dk(grid, HARMONIC, 100.0, 1e4)
    return modes, report


def expand(modes, values):
    return np.repeat(values, modes.weights.astype(int))


def test_homogeneous_dispersion_and_dk(homogeneous):
    grid, modes, _ = homogeneous
    k2 = np.sort(grid.k_squared.ravel())[1:]
    eps, vv, d = bdg.homogeneous_bogoliubov(k2, modes.condensate.mu_phi)
    e = expand(modes, modes.energies)
    order = np.argsort(e, kind="stable")
    assert e.size == grid.n_modes - 1
    assert np.max(np.abs(e[order] / eps - 1)) < 1e-8
    assert np.max(np.abs(expand(modes, modes.vv)[order] / vv - 1)) < 1e-8
    dk = expand(modes, modes.dk)[order]
    assert np.max(np.abs(dk - d)) < 1e-6
    assert np.all((dk > 0) & (dk < 1))


def test_homogeneous_condensate_density_sets_mu(homogeneous):
    grid, modes, _ = homogeneous
    volume = np.prod(grid.extent)
    assert modes.condensate.mu_phi == pytest.approx(40.0 / volume, rel=1e-12)


def test_ideal_trap_gives_oscillator_gaps():
    grid = LatticeGrid.cubic(16, 0.45)
    cond = solve_gpe(grid, HARMONIC, 0.0, n_per_component=1.0)
    modes = bdg.build_and_diagonalize(cond, HARMONIC, n_modes=12)
    gaps = modes.energies
    # levels 1 (x3) and 2 (x6) above the ground state; box edges split level 2 by ~1e-3
    assert np.allclose(np.repeat(gaps, modes.weights.astype(int))[:3], 1.0, rtol=3e-3)
    assert np.allclose(np.repeat(gaps, modes.weights.astype(int))[3:9], 2.0, rtol=3e-3)


@pytest.mark.parametrize("gn", [30.0, 300.0])
def test_kohn_dipole_mode(gn):
    grid = LatticeGrid.cubic(14, 0.6)
    modes, _ = bdg.compute_dk(grid, HARMONIC, gn, 1000.0, parities=[(1, 0, 0)])
    assert modes.energies[0] == pytest.approx(1.0, rel=1e-2)
    assert abs(modes.dk[0]) < 0.02


def test_modes_normalised_and_orthogonal_to_condensate(trapped):
    modes, _ = trapped
    phi = modes.condensate.phi
    dv = modes.condensate.grid.cell_volume
    for sm in modes.sectors:
        norms = np.sum(sm.u**2, 0) - np.sum(sm.v**2, 0)
        assert np.allclose(norms, 1.0, atol=1e-10)
        phi_c = sm.sector.to_coeffs(phi)
        assert np.max(np.abs(phi_c @ sm.u)) < 1e-10
        assert np.max(np.abs(phi_c @ sm.v)) < 1e-10
    assert np.all(modes.energies > 0)
    assert dv > 0


def test_goldstone_mode_projected_out(trapped):
    modes, _ = trapped
    assert modes.energies.min() > 0.5
    assert modes.n_modes == modes.condensate.grid.n_modes - 1


def test_dk_forms_agree_and_sign(trapped):
    modes, report = trapped
    low = modes.energies < 0.8 * modes.condensate.mu_phi
    assert report.max_form_gap < 1e-2
    assert np.max(np.abs(modes.dk[low] - modes.dk_hf[low])) < 1e-6
    # above mu the modes cross the condensate edge and feel it less as mu grows;
    # below, the hydrodynamic breathing mode has d ~ 0 of either sign
    above = modes.energies > modes.condensate.mu_phi
    assert np.all(modes.dk[above] < 0)
    assert np.all(modes.dk < 0.05)
    assert np.all(np.abs(modes.dk) <= 1 + 1e-3)


def test_finite_difference_step_insensitive(trapped):
    modes, _ = trapped
    cond = modes.condensate
    other, _ = bdg.compute_dk(cond.grid, HARMONIC, cond.gn, cond.n_per_component,
                              relative_step=2e-3)
    low = modes.energies < 0.8 * cond.mu_phi
    assert np.max(np.abs(other.dk[low] - modes.dk[low])) < 1e-5


def test_classical_sum_linear_in_t_and_inverse_in_n(trapped):
    modes, _ = trapped
    a = bdg.xi2_min_classical(modes, 1.0, 1e4, check=False)
    assert bdg.xi2_min_classical(modes, 2.0, 1e4, check=False) == pytest.approx(2 * a, rel=1e-14)
    assert bdg.xi2_min_classical(modes, 1.0, 2e4, check=False) == pytest.approx(a / 2, rel=1e-14)
    assert bdg.xi2_min_classical(modes, 1e-8, 1e4, check=False) < 1e-7


def test_quantum_sum_limits(trapped):
    modes, _ = trapped
    zero_t = bdg.xi2_min_quantum(modes, 0.0, 1e4, check=False)
    direct = float(np.sum(modes.weights * modes.dk**2 * modes.vv)) / 1e4
    assert zero_t == pytest.approx(direct, rel=1e-14) and zero_t > 0
    hot = 1e5
    assert (bdg.xi2_min_quantum(modes, hot, 1e4, check=False)
            == pytest.approx(bdg.xi2_min_classical(modes, hot, 1e4, check=False), rel=1e-3))


def test_classical_below_noncondensed_fraction(trapped):
    modes, _ = trapped
    t = 2.0 * modes.condensate.mu_phi
    n_nc = bdg.noncondensed_expectation(modes, t)
    assert bdg.xi2_min_classical(modes, t, 1e4, check=False) < n_nc / 1e4


def test_noncondensed_number_matches_sampler(trapped):
    modes, _ = trapped
    t = 2.0 * modes.condensate.mu_phi
    sampler = ThermalSampler(InitialEnsembleSpec(t, modes, 1e4))
    _, amps = sampler.sample(trajectory_rng(5, 0), 200, return_amplitudes=True)
    dpsi = sampler.fluctuation(amps)
    n_nc = np.sum(np.abs(dpsi.reshape(200, -1)) ** 2, 1) * modes.condensate.grid.cell_volume
    expected = bdg.noncondensed_expectation(modes, t)
    assert abs(n_nc.mean() - expected) < 3 * n_nc.std(ddof=1) / math.sqrt(n_nc.size)
    assert sampler.expected_noncondensed() == pytest.approx(expected, rel=1e-10)


def test_dephasing_monte_carlo(trapped):
    modes, _ = trapped
    t, n = 2.0 * modes.condensate.mu_phi, 1e4
    est = bdg.sample_dephasing_D(modes, t, 10_000, np.random.default_rng(3))
    assert abs(est.mean_d) < 3 * est.mean_d_stderr
    assert abs(est.mean_d2 / n - bdg.xi2_min_classical(modes, t, n, check=False)) < 3 * est.mean_d2_stderr / n
    assert est.max_identity_gap < 1e-12


def test_dephasing_requires_dk():
    grid = LatticeGrid.cubic(6, 0.7)
    cond = solve_gpe(grid, TrapSpec(kind="none"), 10.0, n_per_component=100.0)
    modes = bdg.build_and_diagonalize(cond, TrapSpec(kind="none"))
    with pytest.raises(ValueError):
        bdg.sample_dephasing_D(modes, 1.0, 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        bdg.xi2_min_classical(modes, 1.0, 100.0)


def test_m_operator_annihilates_condensate(trapped):
    modes, _ = trapped
    cond = modes.condensate
    out = bdg.apply_m_operator(cond, HARMONIC, cond.phi)
    assert np.max(np.abs(out)) < 1e-10


def test_sector_roundtrip():
    grid = LatticeGrid.cubic(8, 0.5)
    rng = np.random.default_rng(1)
    field = rng.standard_normal(grid.shape)
    total = np.zeros(grid.shape)
    for sec in bdg.make_sectors(grid):
        total += sec.to_field(sec.to_coeffs(field))
    assert np.allclose(total, field, atol=1e-12)
