"""Stochastic initial state: thermal Bogoliubov field in a, Wigner vacuum in b, pi/2 pulse."""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .bdg import BdgModeSet, SectorModes
from .lattice import LatticeGrid


@dataclasses.dataclass
class InitialEnsembleSpec:
    """Thermal state of component a before the pulse.

    ``modes`` must be computed with the pre-pulse coupling and all N atoms in
    a, i.e. with g(0-) N as the GP parameter.
    """

    temperature: float
    modes: BdgModeSet
    n_atoms: float
    rng_seed: int = 0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if np.any(self.modes.energies <= 0):
            raise ValueError("mode basis contains a non-positive energy")
        if self.modes.sectors[0].u is None:
            raise ValueError("mode basis has no eigenvectors")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per trajectory, fixed by (seed, index) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _circular(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


class ThermalSampler:
    """Draws c_k ~ CN(k_B T/eps_k) and builds psi_a = sqrt(n0) Phi + sum_k (c_k u_k + c_k^* v_k).

    The condensate amplitude is real with n0 = N - (non-condensed number) so
    every realisation carries exactly N atoms.
    """

    def __init__(self, spec: InitialEnsembleSpec):
        self.spec = spec
        self.grid = spec.modes.condensate.grid
        self.sectors: list[SectorModes] = spec.modes.materialized()
        self.sigma = [np.sqrt(spec.temperature / sm.energies) for sm in self.sectors]
        self.n_modes = sum(sm.energies.size for sm in self.sectors)

    def draw_amplitudes(self, rng: np.random.Generator, batch: int = 1) -> list[np.ndarray]:
        return [_circular(rng, (sm.energies.size, batch)) * s[:, None]
                for sm, s in zip(self.sectors, self.sigma)]

    def fluctuation(self, amplitudes: list[np.ndarray]) -> np.ndarray:
        """delta psi for given amplitudes, shape (batch,) + grid shape."""
        out = np.zeros((amplitudes[0].shape[1],) + self.grid.shape, dtype=complex)
        for sm, c in zip(self.sectors, amplitudes):
            coeff = sm.u @ c + sm.v @ np.conj(c)
            out += sm.sector.to_field(coeff.T)
        return out

    def sample(self, rng: np.random.Generator, batch: int = 1, return_amplitudes: bool = False):
        amps = self.draw_amplitudes(rng, batch)
        dpsi = self.fluctuation(amps)
        dv = self.grid.cell_volume
        n_nc = np.sum(np.abs(dpsi.reshape(batch, -1)) ** 2, axis=1) * dv
        n0 = self.spec.n_atoms - n_nc
        if np.any(n0 <= 0):
            raise ValueError("sampled non-condensed number exceeds N; T too high for this N")
        phi = self.spec.modes.condensate.phi
        psi = np.sqrt(n0)[:, None, None, None] * phi + dpsi
        return (psi, amps) if return_amplitudes else psi

    def expected_noncondensed(self) -> float:
        t = self.spec.temperature
        return float(sum(np.sum(t / sm.energies * (np.sum(sm.u**2, 0) + np.sum(sm.v**2, 0)))
                         for sm in self.sectors))


def sample_thermal_a(spec: InitialEnsembleSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    rng = trajectory_rng(spec.rng_seed, 0) if rng is None else rng
    return ThermalSampler(spec).sample(rng)[0]


def sample_vacuum_b(grid: LatticeGrid, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """Half a particle of circular Gaussian noise per lattice mode: <|psi|^2> dV = 1/2."""
    shape = grid.shape if batch is None else (batch,) + grid.shape
    return _circular(rng, shape) * math.sqrt(0.5 / grid.cell_volume)


def project_on_mode(modes: BdgModeSet, k: int, psi: np.ndarray) -> np.ndarray:
    """B_k = <u_k|psi> - <v_k|psi^*> (modes are real)."""
    u, v = modes.mode_fields(k)
    dv = modes.condensate.grid.cell_volume
    axes = tuple(range(psi.ndim - 3, psi.ndim))
    return np.sum(u * psi, axis=axes) * dv - np.sum(v * np.conj(psi), axis=axes) * dv


def apply_pulse(psi_a: np.ndarray, psi_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """pi/2 pulse: psi_{a,b} -> (psi_a -+ psi_b)/sqrt(2)."""
    if psi_a.shape != psi_b.shape:
        raise ValueError("fields live on different grids")
    s = 1 / math.sqrt(2)
    return s * (psi_a - psi_b), s * (psi_a + psi_b)


def quench_coupling(g_before: float, quench: bool = True) -> float:
    """g(0+) = 2 g(0-); ``quench=False`` keeps the coupling unchanged."""
    return 2.0 * g_before if quench else g_before


def footnote_coupling(g_before: float, n_atoms: float, n_lattice_modes: int) -> float:
    """g(0+) from g(0-) N = g(0+)(N + script-N)/2, which also keeps Phi stationary
    once the vacuum particles of b are counted."""
    return 2.0 * g_before * n_atoms / (n_atoms + n_lattice_modes)
