"""Stationary Gross-Pitaevskii condensate on the lattice and Thomas-Fermi relations."""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, minres

from .lattice import LatticeGrid, PhysicalConfig, TrapSpec

log = logging.getLogger(__name__)

SQRT_PI_8 = math.sqrt(math.pi / 8)


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Thomas-Fermi relations between N, gamma, mu and the couplings

def mu_from_gamma(n_atoms: float, gamma: float, omega: float = 1.0) -> float:
    """(mu/hbar omega)^3 = 15 N (pi/8)^(1/2) gamma."""
    return omega * (15.0 * n_atoms * SQRT_PI_8 * gamma) ** (1.0 / 3.0)


def gamma_from_mu(n_atoms: float, mu: float, omega: float = 1.0) -> float:
    return (mu / omega) ** 3 / (15.0 * n_atoms * SQRT_PI_8)


def n_atoms_from(gamma: float, mu: float, omega: float = 1.0) -> float:
    return (mu / omega) ** 3 / (15.0 * SQRT_PI_8 * gamma)


def scattering_length(gamma: float, mu: float) -> float:
    """a(0^-) from gamma^2 = rho(0) a^3 with the Thomas-Fermi rho(0) = mu/g(0^-)."""
    return gamma * math.sqrt(4 * math.pi / mu)


def coupling_before_pulse(config: PhysicalConfig) -> float:
    """g(0^-) = 4 pi hbar^2 a(0^-)/m for the configuration's gamma and N."""
    mu = thomas_fermi(config).mu_tf
    return 4 * math.pi * scattering_length(config.gamma, mu)


def mu_tf_from_gn(gn: float, omega: float = 1.0) -> float:
    """Thomas-Fermi chemical potential of an isotropic harmonic trap for a given g<N>."""
    return 0.5 * omega * (15.0 * gn * omega**1.5 / (4 * math.pi)) ** 0.4 if gn > 0 else 0.0


@dataclasses.dataclass(frozen=True)
class ThomasFermiProfile:
    mu_tf: float
    radius: float
    trap: TrapSpec

    def w(self, r):
        """W(r) = [mu - U(r)] Y[mu - U(r)]."""
        return np.maximum(self.mu_tf - self.trap.radial(r), 0.0)


def thomas_fermi(config: PhysicalConfig) -> ThomasFermiProfile:
    omega = config.trap.omega
    if not config.trap.isotropic_harmonic:
        raise ValueError("the Thomas-Fermi N(mu) relation needs an isotropic harmonic trap")
    mu = mu_from_gamma(config.n_atoms, config.gamma, omega)
    return ThomasFermiProfile(mu, math.sqrt(2 * mu) / omega, config.trap)


# ---------------------------------------------------------------------------

@dataclasses.dataclass
class CondensateSolution:
    """Real, non-negative condensate with unit norm sum_r dV phi^2 = 1.

    ``gn`` is g<N_sigma>; derivatives are with respect to <N_sigma> at fixed g.
    """

    phi: np.ndarray
    mu_phi: float
    gn: float
    n_per_component: float
    energy: float
    residual: float
    grid: LatticeGrid
    dmu_dn: float | None = None
    dphi_dn: np.ndarray | None = None

    @property
    def g(self) -> float:
        return self.gn / self.n_per_component


def _gp_terms(grid, phi, potential, gn):
    h_phi = grid.kinetic(phi) + potential * phi
    nl = gn * phi**3
    dv = grid.cell_volume
    kin_pot = float(np.sum(phi * h_phi) * dv)
    inter = float(np.sum(phi * nl) * dv)
    return h_phi + nl, kin_pot, inter


def gp_residual(grid: LatticeGrid, phi: np.ndarray, potential: np.ndarray, gn: float, mu: float) -> float:
    """|| (h0 + gN phi^2 - mu) phi || in the dV-weighted norm."""
    r = grid.kinetic(phi) + (potential + gn * phi**2 - mu) * phi
    return float(np.sqrt(np.sum(r**2) * grid.cell_volume))


def _initial_guess(grid, potential, gn):
    mu_guess = max(mu_tf_from_gn(gn), 1.5)
    phi = np.sqrt(np.maximum(mu_guess - potential, 0.0)) + np.exp(-potential)
    return phi / math.sqrt(np.sum(phi**2) * grid.cell_volume)


def _imaginary_time(grid, potential, gn, phi, tol, max_iter):
    dv = grid.cell_volume
    mu_est = max(mu_tf_from_gn(gn), 1.5)
    dtau = 0.1 / max(mu_est, float(potential.max()))
    kin = np.exp(-dtau * 0.5 * grid.k_squared)
    energy = None
    for it in range(max_iter):
        half = np.exp(-0.5 * dtau * (potential + gn * phi**2))
        trial = half * phi
        trial = sfft.ifftn(kin * sfft.fftn(trial)).real
        trial = np.exp(-0.5 * dtau * (potential + gn * trial**2)) * trial
        trial = np.abs(trial)
        trial /= math.sqrt(np.sum(trial**2) * dv)
        _, kp, inter = _gp_terms(grid, trial, potential, gn)
        e_new = kp + 0.5 * inter
        if energy is not None and e_new > energy * (1 + 1e-15) + 1e-15:
            dtau *= 0.5
            kin = np.exp(-dtau * 0.5 * grid.k_squared)
            continue
        phi = trial
        if energy is not None and abs(e_new - energy) <= tol * abs(e_new):
            return phi, it
        energy = e_new
    raise ConvergenceError(f"imaginary-time propagation did not converge in {max_iter} steps")


def _newton_polish(grid, potential, gn, phi, target, max_iter=30):
    """Newton steps on the projected GP equation; the linear solves use MINRES on
    Q (h0 - mu + 3 gN phi^2) Q."""
    dv = grid.cell_volume
    shape = grid.shape
    for _ in range(max_iter):
        gp_phi, kp, inter = _gp_terms(grid, phi, potential, gn)
        mu = kp + inter
        resid = gp_phi - mu * phi
        res_norm = math.sqrt(np.sum(resid**2) * dv)
        if res_norm <= target:
            return phi, mu, res_norm
        m_diag = potential - mu + 3 * gn * phi**2

        def project(x):
            return x - phi * (np.sum(phi * x) * dv)

        def matvec(x):
            x = project(x.reshape(shape))
            y = grid.kinetic(x) + m_diag * x
            return project(y).ravel()

        op = LinearOperator((phi.size, phi.size), matvec=matvec, dtype=float)
        delta, info = minres(op, -resid.ravel(), rtol=1e-13, maxiter=2000)
        phi = phi + project(delta.reshape(shape))
        phi /= math.sqrt(np.sum(phi**2) * dv)
    gp_phi, kp, inter = _gp_terms(grid, phi, potential, gn)
    mu = kp + inter
    res_norm = math.sqrt(np.sum((gp_phi - mu * phi) ** 2) * dv)
    if res_norm > 100 * target:
        raise ConvergenceError(f"Newton polish stalled at residual {res_norm:.3g}")
    return phi, mu, res_norm


def solve_gpe(grid: LatticeGrid, trap: TrapSpec | np.ndarray, gn: float, *,
              n_per_component: float | None = None, initial: np.ndarray | None = None,
              energy_tol: float = 1e-12, residual_tol: float = 1e-11,
              max_iter: int = 200_000) -> CondensateSolution:
    """Ground state of [h0 + gN phi^2 - mu] phi = 0 on the lattice.

    Imaginary-time split-step propagation (renormalised and modulus-projected
    every step) until the relative energy change per step drops below
    ``energy_tol``, followed by Newton polishing of the residual.
    """
    if gn < 0:
        raise ValueError("gN must be non-negative")
    potential = trap.on_grid(grid) if isinstance(trap, TrapSpec) else np.asarray(trap, dtype=float)
    phi = _initial_guess(grid, potential, gn) if initial is None else np.abs(initial).astype(float)
    phi = phi / math.sqrt(np.sum(phi**2) * grid.cell_volume)
    if initial is None:
        phi, n_it = _imaginary_time(grid, potential, gn, phi, energy_tol, max_iter)
        log.debug("imaginary time converged after %d steps", n_it)
    phi, mu, res = _newton_polish(grid, potential, gn, phi, residual_tol)
    # fix the sign so that phi is positive where it is large
    if phi.ravel()[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    if phi.min() < -1e-8 * phi.max():
        warnings.warn(f"condensate has negative lattice tails (min {phi.min():.3g})")
    _, kp, inter = _gp_terms(grid, phi, potential, gn)
    n = n_per_component if n_per_component is not None else 1.0
    return CondensateSolution(phi=phi, mu_phi=mu, gn=gn, n_per_component=n,
                              energy=kp + 0.5 * inter, residual=res, grid=grid)


def energy_parts(sol: CondensateSolution, trap: TrapSpec) -> dict[str, float]:
    """Kinetic, potential and interaction energy per particle of the condensate."""
    grid, phi = sol.grid, sol.phi
    dv = grid.cell_volume
    u = trap.on_grid(grid)
    return {
        "kinetic": float(np.sum(phi * grid.kinetic(phi)) * dv),
        "potential": float(np.sum(u * phi**2) * dv),
        "interaction": float(0.5 * sol.gn * np.sum(phi**4) * dv),
    }


def number_derivatives(grid: LatticeGrid, trap: TrapSpec, gn: float, n_per_component: float,
                       relative_step: float = 1e-3, base: CondensateSolution | None = None,
                       noise_tol: float = 1e-4) -> tuple[float, np.ndarray]:
    """d mu_Phi / d<N_sigma> and d Phi / d<N_sigma> at fixed g.

    Centred differences at gN(1 +- delta) and gN(1 +- 2 delta), combined by
    Richardson extrapolation. The two raw step sizes must agree to
    ``noise_tol`` (relative) or a warning flags a noise-dominated step.
    """
    if base is None:
        base = solve_gpe(grid, trap, gn, n_per_component=n_per_component)
    sols = {}
    for k in (-2, -1, 1, 2):
        sols[k] = solve_gpe(grid, trap, gn * (1 + k * relative_step), initial=base.phi,
                            n_per_component=n_per_component * (1 + k * relative_step))
    dn = n_per_component * relative_step
    d1_mu = (sols[1].mu_phi - sols[-1].mu_phi) / (2 * dn)
    d2_mu = (sols[2].mu_phi - sols[-2].mu_phi) / (4 * dn)
    d1_phi = (sols[1].phi - sols[-1].phi) / (2 * dn)
    d2_phi = (sols[2].phi - sols[-2].phi) / (4 * dn)
    scale = max(abs(d1_mu), 1e-300)
    if gn > 0 and abs(d1_mu - d2_mu) > noise_tol * scale:
        warnings.warn(f"finite-difference step looks noise dominated: {d1_mu:.6g} vs {d2_mu:.6g}")
    dmu = (4 * d1_mu - d2_mu) / 3
    dphi = (4 * d1_phi - d2_phi) / 3
    return float(dmu), dphi
