"""Radial BdG spectrum for an isotropic harmonic trap, one angular momentum at a time.

Radial functions chi(r) = r R(r) live on a sine-DVR grid r_i = i dr,
i = 1..M, of [0, r_max] (Dirichlet at both ends). The condensate is
Phi(r) = chi_0(r)/(sqrt(4 pi) r) with sum_i dr chi_0^2 = 1, and each l block
is diagonalised with the same Cholesky reduction as the lattice solver. Modes
carry the weight 2l + 1.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg as sla

from .bdg import _solve_block

FOUR_PI = 4 * math.pi


@dataclasses.dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n_points: int

    @property
    def dr(self) -> float:
        return self.r_max / (self.n_points + 1)

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n_points + 1)

    def kinetic(self) -> np.ndarray:
        """-1/2 d^2/dr^2 in the sine-DVR representation."""
        m = self.n_points
        idx = np.arange(1, m + 1)
        s = math.sqrt(2 / (m + 1)) * np.sin(np.pi * np.outer(idx, idx) / (m + 1))
        k = np.pi * idx / self.r_max
        return (s * (0.5 * k**2)) @ s


@dataclasses.dataclass
class RadialCondensate:
    grid: RadialGrid
    chi: np.ndarray  # unit norm: sum dr chi^2 = 1
    mu_phi: float
    gn: float
    residual: float
    dmu_dn: float | None = None
    dchi_dn: np.ndarray | None = None
    n_per_component: float = 1.0

    @property
    def phi2(self) -> np.ndarray:
        """Phi^2 on the grid."""
        return self.chi**2 / (FOUR_PI * self.grid.r**2)


def solve_radial_gpe(grid: RadialGrid, gn: float, *, n_per_component: float = 1.0,
                     omega: float = 1.0, tol: float = 1e-12, max_iter: int = 100) -> RadialCondensate:
    """Stationary GP equation for the l = 0 radial function by Newton iteration
    on (chi, mu) with the norm constraint, started from the Thomas-Fermi profile."""
    r, dr = grid.r, grid.dr
    h0 = grid.kinetic() + np.diag(0.5 * omega**2 * r**2)
    # Thomas-Fermi start, lightly smoothed by one mean-field eigensolve
    mu_tf = 0.5 * omega * (15.0 * gn * omega**1.5 / FOUR_PI) ** 0.4
    tf = np.maximum(mu_tf - 0.5 * omega**2 * r**2, 0.0)
    chi = r * np.sqrt(FOUR_PI * tf / gn) if gn > 0 else r * np.exp(-0.5 * omega * r**2)
    hmf = h0 + np.diag(np.minimum(tf, mu_tf))
    w, v = sla.eigh(hmf, subset_by_index=(0, 0))
    chi = np.abs(v[:, 0]) / math.sqrt(dr)
    m = chi.size

    def residual(chi):
        nl = gn * chi**2 / (FOUR_PI * r**2)
        hchi = h0 @ chi + nl * chi
        mu = dr * float(chi @ hchi) / (dr * float(chi @ chi))
        f = hchi - mu * chi
        return f, mu, nl, math.sqrt(dr * float(f @ f) + (dr * float(chi @ chi) - 1) ** 2)

    f, mu, nl, res = residual(chi)
    for _ in range(max_iter):
        if res < tol:
            break
        jac = np.zeros((m + 1, m + 1))
        jac[:m, :m] = h0 + np.diag(3 * nl) - mu * np.eye(m)
        jac[:m, m] = -chi
        jac[m, :m] = 2 * dr * chi
        rhs = -np.concatenate([f, [dr * float(chi @ chi) - 1]])
        step = np.linalg.solve(jac, rhs)[:m]
        lam = 1.0
        while lam > 1e-4:
            trial = chi + lam * step
            f_t, mu_t, nl_t, res_t = residual(trial)
            if res_t < res:
                break
            lam *= 0.5
        if res_t >= res:
            break
        chi, f, mu, nl, res = trial, f_t, mu_t, nl_t, res_t
    if res > 1e3 * tol:
        raise RuntimeError(f"radial GP solve stalled at residual {res:.3g}")
    chi = np.abs(chi)
    cond = RadialCondensate(grid, chi, mu, gn, res, n_per_component=n_per_component)
    _number_derivatives(cond, h0)
    return cond


def _number_derivatives(cond: RadialCondensate, h0: np.ndarray):
    """d chi/dN from Q M Q dchi = -Q g Phi^2 chi, then d mu/dN."""
    r, dr = cond.grid.r, cond.grid.dr
    n = cond.n_per_component
    g = cond.gn / n
    nl = cond.gn * cond.phi2
    m_op = h0 + np.diag(3 * nl) - cond.mu_phi * np.eye(r.size)
    c = cond.chi * math.sqrt(dr)  # orthonormal coordinates
    q = np.eye(r.size) - np.outer(c, c)
    rhs = -q @ (g * cond.phi2 * c)
    sol = np.linalg.lstsq(q @ m_op @ q, rhs, rcond=1e-13)[0]
    sol = q @ sol
    dchi = sol / math.sqrt(dr)
    dmu = dr * float(cond.chi @ (g * cond.phi2 * cond.chi)) + dr * float(cond.chi @ (m_op @ dchi))
    cond.dchi_dn = dchi
    cond.dmu_dn = dmu


@dataclasses.dataclass
class RadialModeSet:
    energies: np.ndarray
    vv: np.ndarray
    dk: np.ndarray
    weights: np.ndarray
    l: np.ndarray
    n: np.ndarray
    condensate: RadialCondensate

    @property
    def n_modes(self) -> int:
        return int(self.weights.sum())

    def level(self, n: int, l: int) -> float:
        k = np.nonzero((self.l == l) & (self.n == n))[0]
        if k.size == 0:
            raise KeyError((n, l))
        return float(self.energies[k[0]])


def radial_bdg(cond: RadialCondensate, l_max: int, *, omega: float = 1.0,
               e_cut: float | None = None) -> RadialModeSet:
    """Positive-energy modes for l = 0..l_max with Hellmann-Feynman d_k."""
    grid = cond.grid
    r, dr = grid.r, grid.dr
    kin = grid.kinetic()
    pot = 0.5 * omega**2 * r**2
    nl = cond.gn * cond.phi2
    n = cond.n_per_component
    g = cond.gn / n
    c_phi = cond.chi * math.sqrt(dr)
    # d(g N Phi^2)/dN in the chi representation
    phi_dphi = cond.chi * cond.dchi_dn / (FOUR_PI * r**2)
    dv_source = g * (cond.phi2 + 2 * n * phi_dphi)
    # rank-one pieces, only in l = 0: (dPhi . f)(g N Phi^3 . f) with the 4 pi r^2 measure
    dchi_c = cond.dchi_dn * math.sqrt(dr)
    cubic_c = nl * c_phi
    out = {k: [] for k in ("e", "vv", "d", "w", "l", "n")}
    for l in range(l_max + 1):
        cent = l * (l + 1) / (2 * r**2)
        base = pot + cent - cond.mu_phi + nl
        eps, u, v = _solve_block(kin, base, base + 2 * nl, c_phi if l == 0 else None)
        fp = u + v
        de = (-cond.dmu_dn * np.sum(u**2 + v**2, axis=0)
              + 2 * (dv_source @ (u**2 + v**2 + u * v)))
        if l == 0:
            de -= 2 * (dchi_c @ fp) * (cubic_c @ fp)
        keep = np.ones(eps.size, bool) if e_cut is None else eps <= e_cut
        out["e"].append(eps[keep])
        out["vv"].append(np.sum(v**2, axis=0)[keep])
        # d_k is undefined for the ideal gas, where mu does not move with N
        out["d"].append(de[keep] / cond.dmu_dn if cond.dmu_dn != 0 else np.full(keep.sum(), np.nan))
        out["w"].append(np.full(keep.sum(), 2 * l + 1.0))
        out["l"].append(np.full(keep.sum(), l))
        # radial quantum number; for l = 0 the projected-out phase mode is n = 0
        out["n"].append((np.arange(eps.size) + (1 if l == 0 else 0))[keep])
        if e_cut is not None and not keep.any():
            break
    cat = {k: np.concatenate(v) for k, v in out.items()}
    order = np.argsort(cat["e"], kind="stable")
    return RadialModeSet(cat["e"][order], cat["vv"][order], cat["d"][order], cat["w"][order],
                         cat["l"][order].astype(int), cat["n"][order].astype(int), cond)


def default_radial_grid(mu: float, e_max: float, dr: float | None = None) -> RadialGrid:
    """Box reaching past the classical radius at energy e_max, with a spacing
    resolving momenta up to sqrt(2 e_max) several times over."""
    r_max = math.sqrt(2 * (e_max + mu)) + 4.0
    if dr is None:
        dr = min(0.1, 0.5 / math.sqrt(2 * (e_max + mu)))
    return RadialGrid(r_max, int(math.ceil(r_max / dr)) - 1)
