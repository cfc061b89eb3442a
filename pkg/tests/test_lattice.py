import math

import numpy as np
import pytest
from scipy import integrate

from spinsqueeze.lattice import (CELL_CONSTANT, K3_FBZ, ZETA_3_2, LatticeGrid, PhysicalConfig, TrapSpec,
                                 build_grid, calibrate_cell_size, read_fields, spin_components,
                                 thermal_wavelength, write_fields)


def test_k3_constant_against_independent_quadrature():
    # direct wedge integral: region n_z >= n_x >= n_y >= 0 is 1/48 of the sphere.
    def inner(theta, phi):
        n = (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))
        return math.pi / max(abs(c) for c in n) * math.sin(theta)
    # 0 <= phi <= pi/4 gives n_x >= n_y; theta up to atan(1/cos phi) gives n_z >= n_x
    val, _ = integrate.dblquad(inner, 0, math.pi / 4, 0, lambda ph: math.atan(1 / math.cos(ph)),
                               epsabs=0, epsrel=1e-12)
    assert 48 * val == pytest.approx(K3_FBZ, rel=1e-10)
    assert CELL_CONSTANT == pytest.approx(K3_FBZ / (2 * math.pi**2 * ZETA_3_2), rel=1e-15)


def test_calibration_reproduces_ideal_gas_density():
    t = 3.7
    ell = calibrate_cell_size(t)
    # int_FBZ d^3k/(2 pi)^3 T/(k^2/2) = 2 T K3 / ((2 pi)^3 ell)
    rho = 2 * t * K3_FBZ / ((2 * math.pi) ** 3 * ell)
    assert rho == pytest.approx(ZETA_3_2 / thermal_wavelength(t) ** 3, rel=1e-12)
    assert calibrate_cell_size(4 * t) == pytest.approx(ell / 2, rel=1e-14)


def test_build_grid_arithmetic():
    cfg = PhysicalConfig(1e4, 1e-3, 1.0)
    grid = build_grid(cfg, 8.0, 2.0, spacing=0.5)
    assert grid.shape == (16, 16, 16)
    assert grid.cell_volume == pytest.approx(0.125)
    odd = build_grid(cfg, 7.6, 2.0, spacing=0.5)
    assert all(n % 2 == 0 for n in odd.shape)


def test_build_grid_rejects_box_smaller_than_condensate():
    cfg = PhysicalConfig(1e4, 1e-3, 1.0)
    with pytest.raises(ValueError):
        build_grid(cfg, 3.0, 5.0, spacing=0.5)


def test_fft_roundtrip_and_kinetic_of_plane_wave():
    grid = LatticeGrid.cubic(8, 0.6)
    x, y, z = grid.mesh
    k = grid.k_axes[0][1]
    psi = np.exp(1j * k * x)
    assert np.allclose(grid.from_k(grid.to_k(psi)), psi, atol=1e-13)
    assert np.allclose(grid.kinetic(psi), 0.5 * k * k * psi, atol=1e-12)
    # Parseval in the lattice measure
    assert np.sum(np.abs(grid.to_k(psi)) ** 2) == pytest.approx(grid.norm(psi))


def test_spin_components_defining_cases(rng):
    grid = LatticeGrid.cubic(6, 0.5)
    a = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    n_a = grid.norm(a)
    m = spin_components(a, np.zeros_like(a), grid)
    assert (m.s_x, m.s_y) == (0.0, 0.0)
    assert m.s_z == pytest.approx(n_a / 2)
    m = spin_components(a, a, grid)
    assert m.s_x == pytest.approx(n_a)
    assert m.s_y == pytest.approx(0.0, abs=1e-12 * n_a)
    assert m.s_z == pytest.approx(0.0, abs=1e-12 * n_a)


def test_spin_components_shape_mismatch():
    grid = LatticeGrid.cubic(6, 0.5)
    with pytest.raises(ValueError):
        spin_components(np.zeros((4, 4, 4)), np.zeros((4, 4, 4)), grid)


def test_field_file_roundtrip(tmp_path, rng):
    grid = LatticeGrid((6, 4, 8), (0.5, 0.25, 0.3))
    fields = rng.standard_normal((3,) + grid.shape) + 1j * rng.standard_normal((3,) + grid.shape)
    path = write_fields(tmp_path / "f.sqkf", grid, fields)
    g2, f2 = read_fields(path)
    assert g2 == grid
    assert np.array_equal(f2, fields)


def test_field_file_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.sqkf"
    p.write_bytes(b"XXXX" + bytes(100))
    with pytest.raises(ValueError):
        read_fields(p)


def test_trap_spec_tabulated_matches_harmonic():
    r = np.linspace(0, 10, 2001)
    tab = TrapSpec(kind="tabulated", radii=tuple(r), values=tuple(0.5 * r**2))
    grid = LatticeGrid.cubic(8, 0.7)
    assert np.allclose(tab.on_grid(grid), TrapSpec().on_grid(grid), atol=1e-5)


def test_classical_regime_precondition():
    with pytest.raises(ValueError):
        PhysicalConfig(1e4, 1e-3, 0.5).require_classical_field_regime()
    PhysicalConfig(1e4, 1e-3, 1.5).require_classical_field_regime()
