import math

import numpy as np
import pytest

from spinsqueeze import simulation
from spinsqueeze.dynamics import (SplitStepPropagator, TrajectoryRecord, default_time_step,
                                  ensemble_xi2, extract_min, field_energy, phase_number_estimate,
                                  read_curve_csv, run_trajectory, write_curve_csv)
from spinsqueeze.lattice import LatticeGrid


def test_plane_wave_phase_is_exact():
    grid = LatticeGrid.cubic(8, 0.5)
    x, y, z = grid.mesh
    kx = grid.k_axes[0][1]
    psi = np.exp(1j * kx * x)[None] * np.ones(grid.shape)
    prop = SplitStepPropagator(grid, np.zeros(grid.shape), 0.0, 0.01)
    out = prop.evolve(psi.copy(), 100)
    assert np.allclose(out, psi * np.exp(-0.5j * kx**2 * 1.0), atol=1e-12)


def test_stationary_condensate_phase_slope(small_setup):
    setup = small_setup
    n = setup.config.n_atoms
    psi = math.sqrt(n / 2) * setup.condensate.phi[None].astype(complex)
    peak = n * float(setup.condensate.phi.max()) ** 2 / 2
    dt = default_time_step(setup.grid, setup.potential, setup.g_after, peak, 0.0025)
    prop = SplitStepPropagator(setup.grid, setup.potential, setup.g_after, dt)
    steps = 2000
    out = prop.evolve(psi.copy(), steps)
    overlap = setup.grid.dot(setup.condensate.phi, out[0]) / math.sqrt(n / 2)
    slope = -np.angle(overlap) / (steps * dt)
    assert slope == pytest.approx(setup.mu_phi, rel=1e-6)
    dens = np.abs(out[0]) ** 2
    assert np.max(np.abs(dens - np.abs(psi[0]) ** 2)) < 1e-6 * dens.max()


def test_norm_drift_over_many_steps(small_setup, rng):
    grid = small_setup.grid
    psi = (rng.standard_normal((2,) + grid.shape) + 1j * rng.standard_normal((2,) + grid.shape)) * 5
    norms = grid.norm(psi)
    prop = SplitStepPropagator(grid, small_setup.potential, small_setup.g_after, 1e-3)
    out = prop.evolve(psi, 10_000)
    assert np.max(np.abs(grid.norm(out) / norms - 1)) < 1e-10


def test_numpy_and_compiled_phase_agree(small_setup, rng):
    grid = small_setup.grid
    psi = rng.standard_normal((2,) + grid.shape) + 0j
    a = SplitStepPropagator(grid, small_setup.potential, 0.3, 1e-3, use_numba=True).evolve(psi.copy(), 20)
    b = SplitStepPropagator(grid, small_setup.potential, 0.3, 1e-3, use_numba=False).evolve(psi.copy(), 20)
    assert np.allclose(a, b, atol=1e-12)


@pytest.fixture(scope="module")
def short_record(small_setup):
    return simulation.run_ensemble(small_setup, 8, t_max=0.2, sample_stride=20, batch=4,
                                   track_energy=True)


def test_per_trajectory_conservation(short_record):
    rec = short_record
    assert np.max(np.abs(rec.s_z - rec.s_z[:, :1])) < 1e-10 * np.max(rec.n_a)
    assert np.max(np.abs(rec.n_a + rec.n_b - (rec.n_a + rec.n_b)[:, :1]) / (rec.n_a + rec.n_b)[:, :1]) < 1e-10
    rel = np.abs(rec.energy / rec.energy[:, :1] - 1)
    assert np.max(rel) < 1e-6


def test_ensemble_is_deterministic_and_batch_independent(small_setup, short_record):
    again = simulation.run_ensemble(small_setup, 8, t_max=0.2, sample_stride=20, batch=3)
    for f in ("s_x", "s_y", "s_z"):
        assert np.array_equal(getattr(again, f), getattr(short_record, f))
    other = simulation.run_ensemble(small_setup, 8, seed=99, t_max=0.2, sample_stride=20, batch=4)
    assert not np.array_equal(other.s_z, short_record.s_z)


def test_field_energy_of_ground_state(small_setup):
    setup = small_setup
    phi = setup.condensate.phi
    e = field_energy(phi[None], setup.grid, setup.potential, 0.0)[0]
    kin = setup.grid.dot(phi, setup.grid.kinetic(phi)).real
    assert e == pytest.approx(kin + setup.grid.dot(phi, setup.potential * phi).real, rel=1e-12)


def _fake_record(sx, sy, sz):
    times = np.arange(sx.shape[1], dtype=float)
    return TrajectoryRecord(times, sx, sy, sz, 0.5 * np.ones_like(sx), 0.5 * np.ones_like(sx))


def test_xi2_zero_for_fully_correlated_input():
    sx = np.full((10, 3), 50.0)
    zeros = np.zeros_like(sx)
    curve = ensemble_xi2(_fake_record(sx, zeros, zeros), 100.0)
    assert np.allclose(curve.xi2, 0.0)


def test_xi2_coherent_state_is_one(rng):
    n, m = 4000.0, 20_000
    # coherent spin state along x: binomial transverse noise of variance N/4
    sx = np.full((m, 1), n / 2)
    sy = rng.normal(0, math.sqrt(n / 4), (m, 1))
    sz = rng.normal(0, math.sqrt(n / 4), (m, 1))
    curve = ensemble_xi2(_fake_record(sx, sy, sz), n, jackknife_blocks=50)
    assert curve.xi2[0] == pytest.approx(1.0, abs=4 * curve.xi2_stderr[0] + 1 / n)


def test_xi2_finds_squeezed_quadrature(rng):
    n, m = 1000.0, 50_000
    a, b = rng.normal(0, 1, (2, m))
    # squeezed along the direction (1, 1)/sqrt 2 in the y-z plane
    sy = (3.0 * a + 0.2 * b) / math.sqrt(2)
    sz = (3.0 * a - 0.2 * b) / math.sqrt(2)
    sx = np.full(m, n / 2)
    curve = ensemble_xi2(_fake_record(sx[:, None], sy[:, None], sz[:, None]), n, jackknife_blocks=20)
    assert curve.delta_perp2[0] == pytest.approx(0.04, rel=0.05)


def test_extract_min_on_synthetic_curves():
    t = np.linspace(0, 10, 101)
    para = 0.1 + (t - 4.0) ** 2
    info = extract_min(para, t)
    assert info.t_best == pytest.approx(4.0) and info.xi2_min == pytest.approx(0.1) and info.interior
    flat = np.where((t > 3) & (t < 7), 0.2, 0.2 + (np.minimum(np.abs(t - 3), np.abs(t - 7))) ** 2)
    flat[50] = 0.199
    info = extract_min(flat, t)
    assert info.plateau_width == pytest.approx(4.0 + 2 * math.sqrt(0.0199), abs=0.11)
    with pytest.warns(UserWarning):
        extract_min(t, t)


def test_phase_number_estimator(rng):
    theta = rng.normal(0, 0.3, 5000)
    dn = rng.normal(0, 10, 5000)
    assert phase_number_estimate(theta, dn).xi2 == pytest.approx(1.0, abs=0.01)
    assert phase_number_estimate(theta, 3 * theta + 1).xi2 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        phase_number_estimate(np.array([0.1, 3.0]), np.array([1.0, 2.0]))


def test_curve_csv_roundtrip(tmp_path, short_record, small_setup):
    curve = ensemble_xi2(short_record, small_setup.config.n_atoms, t_rescale=2.0)
    path = write_curve_csv(tmp_path / "c.csv", curve)
    back = read_curve_csv(path)
    assert np.array_equal(back["xi2"], curve.xi2)
    assert np.array_equal(back["t_rescaled"], 2.0 * curve.times)


def test_initial_squeezing_at_standard_limit(small_setup):
    rec = simulation.run_ensemble(small_setup, 400, t_max=1e-9, sample_stride=1, batch=100)
    curve = ensemble_xi2(rec, small_setup.config.n_atoms, jackknife_blocks=40)
    n = small_setup.config.n_atoms
    assert curve.xi2[0] == pytest.approx(1.0, abs=3 * curve.xi2_stderr[0] + 10 / n)


def test_squeezing_curve_converged_in_time_step(small_setup):
    # same trajectories at dt and dt/2; Strang splitting should leave a change ~ dt^2
    t_max = 1.0 / simulation.rescaled_time_factor(small_setup)
    n = small_setup.config.n_atoms
    curves = [ensemble_xi2(simulation.run_ensemble(small_setup, 48, t_max=t_max, dt_factor=fac,
                                                   sample_stride=stride, batch=48), n)
              for fac, stride in ((0.1, 20), (0.05, 40))]
    assert np.allclose(curves[0].times, curves[1].times, rtol=1e-12)
    assert np.max(np.abs(curves[0].xi2 / curves[1].xi2 - 1)) < 1e-3


def test_mean_spin_carries_vacuum_offset(small_setup):
    # a holds exactly N classical-field atoms; after the pulse the half particle
    # per mode of b enters <S_x> with the opposite sign
    rec = simulation.run_ensemble(small_setup, 200, t_max=1e-9, sample_stride=1, batch=100)
    n = small_setup.config.n_atoms
    expected = 1 - small_setup.grid.n_modes / (2 * n)
    assert rec.s_x[:, 0].mean() / (n / 2) == pytest.approx(expected, abs=1e-3)
