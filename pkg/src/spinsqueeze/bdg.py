"""Bogoliubov-de Gennes spectrum on the lattice and the minimal squeezing mode sums.

The BdG problem for a real condensate,

    A u + B v = eps u,   -B u - A v = eps v,
    A = Q(h0 - mu + 2 gN phi^2)Q,   B = Q gN phi^2 Q,

is reduced with f+- = u +- v to (A-B)(A+B) f+ = eps^2 f+. Since A - B is the
(positive) GP operator on the space orthogonal to phi, a Cholesky factor
A - B = L L^T turns this into the symmetric problem L^T (A+B) L y = eps^2 y.
Blocks are formed per parity sector (reflection parity along each axis) so the
dense eigensolves stay small.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import warnings

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .ground_state import CondensateSolution, solve_gpe
from .lattice import LatticeGrid, TrapSpec

log = logging.getLogger(__name__)


class SpectrumError(RuntimeError):
    pass


class UnsaturatedSumWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# parity sectors

def axis_parity_bases(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal even/odd bases for one periodic axis with points x_j = (j - n/2) l.

    The reflection maps j -> (n - j) mod n; j = 0 and j = n/2 are fixed points.
    """
    if n % 2:
        raise ValueError("parity blocking needs an even number of points")
    half = n // 2
    even = np.zeros((n, half + 1))
    odd = np.zeros((n, half - 1))
    even[0, 0] = 1.0
    even[half, 1] = 1.0
    s = 1 / math.sqrt(2)
    for c, j in enumerate(range(1, half)):
        even[j, c + 2] = s
        even[n - j, c + 2] = s
        odd[j, c] = s
        odd[n - j, c] = -s
    return even, odd


def kinetic_matrix_1d(n: int, spacing: float) -> np.ndarray:
    """p^2/2 on a periodic axis with the parabolic first-Brillouin-zone dispersion."""
    k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    return np.fft.ifft(0.5 * k[:, None] ** 2 * np.fft.fft(np.eye(n), axis=0), axis=0).real


@dataclasses.dataclass
class Sector:
    parity: tuple[int, int, int]
    bases: tuple[np.ndarray, np.ndarray, np.ndarray]
    cell_volume: float

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(b.shape[1] for b in self.bases)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def to_coeffs(self, field: np.ndarray) -> np.ndarray:
        """Orthonormal sector coordinates (the sqrt(dV) makes them unit-normalised)."""
        px, py, pz = self.bases
        c = np.einsum("...ijk,ia,jb,kc->...abc", field, px, py, pz, optimize=True)
        return c.reshape(c.shape[:-3] + (-1,)) * math.sqrt(self.cell_volume)

    def to_field(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_coeffs`; ``coeffs`` has the sector index last."""
        px, py, pz = self.bases
        c = np.asarray(coeffs).reshape(coeffs.shape[:-1] + self.dims)
        return np.einsum("...abc,ia,jb,kc->...ijk", c, px, py, pz, optimize=True) / math.sqrt(self.cell_volume)

    def diagonal(self, values: np.ndarray) -> np.ndarray:
        """Diagonal of a parity-symmetric multiplicative operator in this sector."""
        px, py, pz = self.bases
        d = np.einsum("ijk,ia,jb,kc->abc", values, px**2, py**2, pz**2, optimize=True)
        return d.ravel()

    def kinetic(self, kin_1d: tuple[np.ndarray, ...]) -> np.ndarray:
        blocks = [b.T @ t @ b for b, t in zip(self.bases, kin_1d)]
        eyes = [np.eye(b.shape[0]) for b in blocks]
        out = np.kron(np.kron(blocks[0], eyes[1]), eyes[2])
        out += np.kron(np.kron(eyes[0], blocks[1]), eyes[2])
        out += np.kron(np.kron(eyes[0], eyes[1]), blocks[2])
        return out


def _is_parity_symmetric(values: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(float(np.abs(values).max()), 1e-300)
    for axis in range(3):
        n = values.shape[axis]
        idx = (n - np.arange(n)) % n
        if np.abs(np.take(values, idx, axis=axis) - values).max() > tol * scale:
            return False
    return True


def _is_permutation_symmetric(values: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(float(np.abs(values).max()), 1e-300)
    return all(np.abs(np.transpose(values, p) - values).max() <= tol * scale
               for p in ((1, 0, 2), (0, 2, 1)))


def make_sectors(grid: LatticeGrid, blocked: bool = True) -> list[Sector]:
    if not blocked:
        eyes = tuple(np.eye(n) for n in grid.shape)
        return [Sector((0, 0, 0), eyes, grid.cell_volume)]
    per_axis = [axis_parity_bases(n) for n in grid.shape]
    sectors = []
    for parity in itertools.product((0, 1), repeat=3):
        bases = tuple(per_axis[a][p] for a, p in enumerate(parity))
        if all(b.shape[1] > 0 for b in bases):
            sectors.append(Sector(parity, bases, grid.cell_volume))
    return sectors


# ---------------------------------------------------------------------------
# one block

def _householder_complement(phi_c: np.ndarray):
    """Reflector H with H phi = -sign(phi_0) e_0; columns 1: of H span phi-perp."""
    v = phi_c.copy()
    v[0] += math.copysign(np.linalg.norm(phi_c), phi_c[0])
    beta = 2.0 / float(v @ v)
    return v, beta


def _project_out(mat: np.ndarray, v: np.ndarray, beta: float) -> np.ndarray:
    av = mat @ v
    vav = float(v @ av)
    hah = mat - beta * np.outer(v, av) - beta * np.outer(av, v) + beta**2 * vav * np.outer(v, v)
    return hah[1:, 1:]


def _lift(c: np.ndarray, v: np.ndarray, beta: float) -> np.ndarray:
    padded = np.vstack([np.zeros((1,) + c.shape[1:]), c])
    return padded - beta * np.outer(v, v @ padded)


def _solve_block(kin: np.ndarray, x_diag: np.ndarray, m_diag: np.ndarray,
                 phi_c: np.ndarray | None, vectors: bool = True):
    """Positive-energy BdG modes of one block.

    ``x_diag`` holds U - mu + gN phi^2 and ``m_diag`` U - mu + 3 gN phi^2 in the
    sector; ``phi_c`` (unit vector) is projected out when the block contains phi.
    """
    x = kin + np.diag(x_diag)
    m = kin + np.diag(m_diag)
    hh = None
    if phi_c is not None:
        hh = _householder_complement(phi_c)
        x = _project_out(x, *hh)
        m = _project_out(m, *hh)
    try:
        lower = np.linalg.cholesky(x)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError("GP operator is not positive on the phi-orthogonal space; "
                            "condensate is not the ground state or a zero mode leaked in") from exc
    h = lower.T @ m @ lower
    if not vectors:
        w = sla.eigvalsh(h, overwrite_a=True, check_finite=False)
        if w[0] <= 0:
            raise SpectrumError(f"non-positive eps^2 = {w[0]:.3g}")
        return np.sqrt(w), None, None
    w, y = sla.eigh(h, overwrite_a=True, check_finite=False)
    if w[0] <= 0:
        raise SpectrumError(f"non-positive eps^2 = {w[0]:.3g}")
    eps = np.sqrt(w)
    y = y / np.sqrt(eps)
    f_plus = lower @ y
    f_minus = (m @ f_plus) / eps
    u = 0.5 * (f_plus + f_minus)
    v = 0.5 * (f_plus - f_minus)
    if hh is not None:
        u = _lift(u, *hh)
        v = _lift(v, *hh)
    return eps, u, v


# ---------------------------------------------------------------------------

@dataclasses.dataclass
class SectorModes:
    sector: Sector
    energies: np.ndarray
    u: np.ndarray | None  # (sector size, n modes), orthonormal sector coordinates
    v: np.ndarray | None
    weight: int = 1  # number of symmetry-equivalent sectors represented


@dataclasses.dataclass
class BdgModeSet:
    """All positive-energy modes, concatenated over sectors and sorted by energy.

    ``weights`` count symmetry-equivalent copies (sectors related by a
    permutation of the cubic axes are diagonalised once).
    """

    energies: np.ndarray
    vv: np.ndarray
    weights: np.ndarray
    sector_of: np.ndarray
    index_in_sector: np.ndarray
    sectors: list[SectorModes]
    condensate: CondensateSolution
    dk: np.ndarray | None = None
    dk_hf: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return int(self.weights.sum())

    def mode_fields(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(u_k, v_k) on the grid (only for materialised sectors)."""
        sm = self.sectors[self.sector_of[k]]
        j = self.index_in_sector[k]
        return sm.sector.to_field(sm.u[:, j]), sm.sector.to_field(sm.v[:, j])

    def materialized(self) -> list[SectorModes]:
        """Every sector explicitly, expanding permutation-equivalent copies."""
        out = []
        for sm in self.sectors:
            out.append(sm)
            if sm.weight > 1:
                out.extend(_permuted_copies(sm))
        return out


def _permuted_copies(sm: SectorModes) -> list[SectorModes]:
    parity = sm.sector.parity
    seen = {parity}
    copies = []
    for perm in itertools.permutations(range(3)):
        new_parity = tuple(parity[p] for p in perm)
        if new_parity in seen:
            continue
        seen.add(new_parity)
        bases = tuple(sm.sector.bases[p] for p in perm)
        sec = Sector(new_parity, bases, sm.sector.cell_volume)
        dims = sm.sector.dims

        def permute(a):
            m = a.shape[1]
            t = a.reshape(dims + (m,)).transpose(tuple(perm) + (3,))
            return t.reshape(-1, m)

        copies.append(SectorModes(sec, sm.energies, permute(sm.u), permute(sm.v), 1))
    return copies


def _sector_plan(grid: LatticeGrid, potential: np.ndarray, phi: np.ndarray,
                 blocked: bool, use_symmetry: bool, parities=None):
    blocked = blocked and all(n % 2 == 0 for n in grid.shape) and _is_parity_symmetric(potential) \
        and _is_parity_symmetric(phi, tol=1e-9)
    sectors = make_sectors(grid, blocked)
    if parities is not None:
        sectors = [s for s in sectors if s.parity in set(parities)]
    symmetric = (use_symmetry and blocked and grid.is_cubic and parities is None
                 and _is_permutation_symmetric(potential) and _is_permutation_symmetric(phi, tol=1e-9))
    plan = []
    for s in sectors:
        if symmetric:
            if tuple(sorted(s.parity, reverse=True)) != s.parity:
                continue
            weight = len(set(itertools.permutations(s.parity)))
        else:
            weight = 1
        plan.append((s, weight))
    return plan


def build_and_diagonalize(cond: CondensateSolution, trap: TrapSpec | np.ndarray, *,
                          blocked: bool = True, use_symmetry: bool = True,
                          parities=None, vectors: bool = True,
                          n_modes: int | None = None) -> BdgModeSet:
    """Positive-energy BdG modes around ``cond`` on its lattice.

    ``parities`` restricts the computation to the listed sectors (e.g. the
    dipole sector (1, 0, 0)). ``n_modes`` keeps only the lowest modes.
    """
    grid = cond.grid
    potential = trap.on_grid(grid) if isinstance(trap, TrapSpec) else np.asarray(trap, float)
    gn_phi2 = cond.gn * cond.phi**2
    kin_1d = tuple(kinetic_matrix_1d(n, s) for n, s in zip(grid.shape, grid.spacing))
    plan = _sector_plan(grid, potential, cond.phi, blocked, use_symmetry, parities)
    results = []
    for sector, weight in plan:
        kin = sector.kinetic(kin_1d)
        base = sector.diagonal(potential - cond.mu_phi + gn_phi2)
        m_diag = base + 2 * sector.diagonal(gn_phi2)
        phi_c = sector.to_coeffs(cond.phi)
        contains_phi = np.linalg.norm(phi_c) > 0.5
        if contains_phi:
            phi_c = phi_c / np.linalg.norm(phi_c)
        eps, u, v = _solve_block(kin, base, m_diag, phi_c if contains_phi else None, vectors)
        results.append(SectorModes(sector, eps, u, v, weight))
    return _assemble(results, cond, n_modes)


def _assemble(results: list[SectorModes], cond, n_modes=None) -> BdgModeSet:
    energies, vv, weights, sector_of, index = [], [], [], [], []
    for i, sm in enumerate(results):
        energies.append(sm.energies)
        if sm.v is not None:
            vv.append(np.sum(sm.v**2, axis=0))
        else:
            vv.append(np.full(sm.energies.shape, np.nan))
        weights.append(np.full(sm.energies.shape, sm.weight))
        sector_of.append(np.full(sm.energies.shape, i))
        index.append(np.arange(sm.energies.size))
    energies = np.concatenate(energies)
    order = np.argsort(energies, kind="stable")
    if n_modes is not None:
        order = order[:n_modes]
    return BdgModeSet(energies=energies[order], vv=np.concatenate(vv)[order],
                      weights=np.concatenate(weights)[order].astype(float),
                      sector_of=np.concatenate(sector_of)[order],
                      index_in_sector=np.concatenate(index)[order],
                      sectors=results, condensate=cond)


# ---------------------------------------------------------------------------
# d_k = d eps_k / d mu_Phi

def hellmann_feynman_derivatives(modes: BdgModeSet, dmu_dn: float, dphi_dn: np.ndarray) -> np.ndarray:
    """d eps_k / d<N> from the derivative of the BdG operator (Q included)."""
    cond = modes.condensate
    phi, n = cond.phi, cond.n_per_component
    g = cond.gn / n
    dv_source = g * (phi**2 + 2 * n * phi * dphi_dn)  # d(g N phi^2)/dN
    cubic = cond.gn * phi**3
    out = np.empty(modes.energies.size)
    per_sector = []
    for sm in modes.sectors:
        sec = sm.sector
        w = sec.diagonal(dv_source)
        dphi_c = sec.to_coeffs(dphi_dn)
        cubic_c = sec.to_coeffs(cubic)
        u, v = sm.u, sm.v
        fp = u + v
        val = (-dmu_dn * np.sum(u**2 + v**2, axis=0)
               + 2 * (w @ (u**2 + v**2 + u * v))
               - 2 * (dphi_c @ fp) * (cubic_c @ fp))
        per_sector.append(val)
    for k in range(modes.energies.size):
        out[k] = per_sector[modes.sector_of[k]][modes.index_in_sector[k]]
    return out


@dataclasses.dataclass
class DerivativeReport:
    relative_step: float
    dmu_dn: float
    max_form_gap: float
    min_overlap: float
    unmatched: int


def _perturbed(grid, trap, gn, n, delta, base_phi):
    return {k: solve_gpe(grid, trap, gn * (1 + k * delta), initial=base_phi,
                         n_per_component=n * (1 + k * delta)) for k in (-2, -1, 1, 2)}


def _richardson(f_m2, f_m1, f_p1, f_p2, h):
    d1 = (f_p1 - f_m1) / (2 * h)
    d2 = (f_p2 - f_m2) / (4 * h)
    return (4 * d1 - d2) / 3


def _match_modes(base: SectorModes, other: SectorModes, deg_tol: float):
    """Partner of each base mode in ``other`` by maximal symplectic overlap.

    Returns the permutation and, per mode, the overlap weight carried by the
    partner's degenerate cluster (1 for a clean match).
    """
    ov = (base.u.T @ other.u - base.v.T @ other.v) ** 2
    _, perm = linear_sum_assignment(-ov)
    e = other.energies
    quality = np.empty(base.energies.size)
    for k, j in enumerate(perm):
        cluster = np.abs(e - e[j]) <= deg_tol * max(1.0, e[j])
        quality[k] = ov[k, cluster].sum()
    return perm, quality


def compute_dk(grid: LatticeGrid, trap: TrapSpec, gn: float, n_per_component: float, *,
               relative_step: float = 1e-3, base: CondensateSolution | None = None,
               parities=None, use_symmetry: bool = True, deg_tol: float = 1e-7,
               overlap_min: float = 0.99, form_tol: float = 1e-2,
               _retry: bool = True) -> tuple[BdgModeSet, DerivativeReport]:
    """BdG modes at gN with d_k = d eps_k/d mu_Phi filled in.

    The finite-difference form (d eps/dN)/(d mu/dN) uses centred differences
    at gN(1 +- delta) and gN(1 +- 2 delta), Richardson-combined. Modes are
    followed across the displaced spectra by maximal overlap within each
    sector, so near-crossings of almost degenerate levels are handled. The
    Hellmann-Feynman form is computed from the same d mu/dN and d phi/dN.
    """
    if base is None:
        base = solve_gpe(grid, trap, gn, n_per_component=n_per_component)
    modes = build_and_diagonalize(base, trap, parities=parities, use_symmetry=use_symmetry)
    sols = _perturbed(grid, trap, gn, n_per_component, relative_step, base.phi)
    h = n_per_component * relative_step
    dmu_dn = _richardson(*(sols[k].mu_phi for k in (-2, -1, 1, 2)), h)
    dphi_dn = _richardson(*(sols[k].phi for k in (-2, -1, 1, 2)), h)
    base.dmu_dn, base.dphi_dn = dmu_dn, dphi_dn
    spectra = {k: build_and_diagonalize(sols[k], trap, parities=parities, use_symmetry=use_symmetry)
               for k in (-2, -1, 1, 2)}
    deps_per_sector = []
    min_ov, unmatched = 1.0, 0
    for i, sm in enumerate(modes.sectors):
        shifted = []
        for k in (-2, -1, 1, 2):
            perm, quality = _match_modes(sm, spectra[k].sectors[i], deg_tol)
            shifted.append(spectra[k].sectors[i].energies[perm])
            min_ov = min(min_ov, float(quality.min()))
            unmatched += int(np.sum(quality < overlap_min))
        deps_per_sector.append(_richardson(*shifted, h))
    deps = np.array([deps_per_sector[s][j] for s, j in zip(modes.sector_of, modes.index_in_sector)])
    modes.dk = deps / dmu_dn
    modes.dk_hf = hellmann_feynman_derivatives(modes, dmu_dn, dphi_dn) / dmu_dn
    gap = float(np.max(np.abs(modes.dk - modes.dk_hf) / np.maximum(np.abs(modes.dk), 1.0)))
    if gap > form_tol and _retry:
        log.info("d_k forms differ by %.3g at delta=%g, retrying with half the step", gap, relative_step)
        return compute_dk(grid, trap, gn, n_per_component, relative_step=relative_step / 2,
                          base=base, parities=parities, use_symmetry=use_symmetry,
                          deg_tol=deg_tol, overlap_min=overlap_min, form_tol=form_tol, _retry=False)
    if gap > form_tol:
        warnings.warn(f"finite-difference and Hellmann-Feynman d_k differ by {gap:.3g} "
                      f"({unmatched} weakly matched modes)")
    report = DerivativeReport(relative_step, dmu_dn, gap, min_ov, unmatched)
    return modes, report


def apply_m_operator(cond: CondensateSolution, trap: TrapSpec, field: np.ndarray) -> np.ndarray:
    """M x = Q (h0 - mu + 3 gN phi^2) Q x."""
    grid, phi = cond.grid, cond.phi
    dv = grid.cell_volume

    def q(x):
        return x - phi * (np.sum(phi * x) * dv)

    x = q(field)
    y = grid.kinetic(x) + (trap.on_grid(grid) - cond.mu_phi + 3 * cond.gn * phi**2) * x
    return q(y)


# ---------------------------------------------------------------------------
# mode sums

def _check_saturation(terms: np.ndarray, energies: np.ndarray, label: str, limit: float = 0.01):
    total = terms.sum()
    if total <= 0 or terms.size < 10:
        return
    order = np.argsort(energies)
    tail = terms[order][int(0.9 * terms.size):].sum()
    if tail > limit * total:
        warnings.warn(f"{label}: highest-energy decile contributes {tail / total:.2%}",
                      UnsaturatedSumWarning, stacklevel=3)


def xi2_min_classical(modes: BdgModeSet, temperature: float, n_atoms: float, *,
                      check: bool = True) -> float:
    """(1/N) sum_k d_k^2 (k_B T/eps_k)(1 + 2<v_k|v_k>) for classical fields."""
    if modes.dk is None:
        raise ValueError("mode set has no d_k; use compute_dk")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    terms = modes.weights * modes.dk**2 * (temperature / modes.energies) * (1 + 2 * modes.vv)
    if check:
        _check_saturation(terms, modes.energies, "classical mode sum")
    return float(terms.sum() / n_atoms)


def bose_occupation(energies: np.ndarray, temperature: float) -> np.ndarray:
    if temperature <= 0:
        return np.zeros_like(energies)
    return 1.0 / np.expm1(energies / temperature)


def xi2_min_quantum(modes: BdgModeSet, temperature: float, n_atoms: float, *,
                    check: bool = True) -> float:
    """(1/N) sum_k d_k^2 [(1 + 2<v|v>)/(exp(eps_k/k_B T) - 1) + <v|v>]."""
    if modes.dk is None:
        raise ValueError("mode set has no d_k; use compute_dk")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    occ = bose_occupation(modes.energies, temperature)
    terms = modes.weights * modes.dk**2 * ((1 + 2 * modes.vv) * occ + modes.vv)
    if check:
        _check_saturation(terms, modes.energies, "quantum mode sum")
    return float(terms.sum() / n_atoms)


def noncondensed_expectation(modes: BdgModeSet, temperature: float) -> float:
    """sum_k (k_B T/eps_k)(<u|u> + <v|v>) for classical equipartition."""
    return float(np.sum(modes.weights * temperature / modes.energies * (1 + 2 * modes.vv)))


@dataclasses.dataclass
class DephasingEstimate:
    mean_d: float
    mean_d_stderr: float
    mean_d2: float
    mean_d2_stderr: float
    max_identity_gap: float
    n_samples: int


def sample_dephasing_D(modes: BdgModeSet, temperature: float, n_samples: int,
                       rng: np.random.Generator, chunk: int = 2000) -> DephasingEstimate:
    """Monte-Carlo of D with c_ka(0^-) ~ CN(k_B T/eps_k) and B_k ~ CN(1/2 + <v|v>).

    Both expressions for D (occupation difference after the pulse, and the
    cross term) are evaluated per sample and required to agree.
    """
    if not temperature > 0:
        raise ValueError("classical statistics need T > 0")
    if modes.dk is None:
        raise ValueError("mode set has no d_k")
    # symmetry copies are independent modes with identical (eps, d, vv)
    reps = modes.weights.astype(int)
    eps = np.repeat(modes.energies, reps)
    d = np.repeat(modes.dk, reps)
    vv = np.repeat(modes.vv, reps)
    var_c = temperature / eps
    var_b = 0.5 + vv
    d_vals = []
    gap = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        c = _circular(rng, (m, eps.size)) * np.sqrt(var_c)
        b = _circular(rng, (m, eps.size)) * np.sqrt(var_b)
        ca = (c - b) / math.sqrt(2)
        cb = (c + b) / math.sqrt(2)
        d_occ = (np.abs(ca) ** 2 - np.abs(cb) ** 2) @ d
        d_cross = -(2 * (c * np.conj(b)).real) @ d
        scale = np.abs(c) ** 2 @ np.abs(d) + np.abs(b) ** 2 @ np.abs(d)
        gap = max(gap, float(np.max(np.abs(d_occ - d_cross) / scale)))
        d_vals.append(d_occ)
        done += m
    if gap > 1e-12:
        raise AssertionError(f"dephasing identity violated by {gap:.3g}")
    vals = np.concatenate(d_vals)
    sq = vals**2
    n = vals.size
    return DephasingEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)),
                             float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n)), gap, n)


def _circular(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex Gaussian with <|z|^2> = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def homogeneous_bogoliubov(k_squared: np.ndarray, mu: float):
    """Analytic (eps, <v|v>, d) for plane waves with E = k^2/2 and g rho = mu."""
    e = 0.5 * np.asarray(k_squared)
    eps = np.sqrt(e * (e + 2 * mu))
    vv = 0.5 * ((e + mu) / eps - 1)
    return eps, vv, e / eps
