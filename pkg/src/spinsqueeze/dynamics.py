"""Classical-field propagation of both components and the spin squeezing statistics.

Each component obeys i d_t psi = [h0 + g |psi|^2] psi independently (no a-b
interaction). The integrator is second-order Strang splitting with the
kinetic step done exactly in Fourier space; consecutive half phase steps are
merged because the nonlinear phase leaves |psi| unchanged.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .lattice import LatticeGrid, SpinMoments, spin_components

log = logging.getLogger(__name__)

try:
    import numba

    @numba.njit(cache=True, nogil=True)
    def _phase_kernel(psi, potential, g, dt):
        m, p = psi.shape
        for i in range(m):
            for j in range(p):
                z = psi[i, j]
                theta = -dt * (potential[j] + g * (z.real * z.real + z.imag * z.imag))
                c = math.cos(theta)
                s = math.sin(theta)
                psi[i, j] = complex(z.real * c - z.imag * s, z.real * s + z.imag * c)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _phase_numpy(psi, potential, g, dt):
    psi *= np.exp(-1j * dt * (potential + g * (psi.real**2 + psi.imag**2)))


class TrajectoryError(RuntimeError):
    pass


def default_time_step(grid: LatticeGrid, potential: np.ndarray, g: float, peak_density: float,
                      factor: float = 0.025) -> float:
    """dt = factor / E_max with E_max = max(k_max^2/2, max|U + g rho|)."""
    e_max = max(0.5 * float(grid.k_squared.max()), float(np.max(np.abs(potential))) + g * peak_density)
    return factor / e_max


class SplitStepPropagator:
    """Strang splitting for a stack of independent fields of shape (M,) + grid.shape."""

    def __init__(self, grid: LatticeGrid, potential: np.ndarray, g: float, dt: float,
                 use_numba: bool = True):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.potential = np.ascontiguousarray(potential, dtype=float)
        self.g = float(g)
        self.dt = float(dt)
        self.kin_phase = np.exp(-0.5j * dt * grid.k_squared)
        self._phase = _phase_kernel if (use_numba and HAVE_NUMBA) else _phase_numpy

    def _apply_phase(self, psi, fraction):
        flat = psi.reshape(psi.shape[0], -1)
        self._phase(flat, self.potential.ravel(), self.g, fraction * self.dt)

    def _kinetic(self, psi):
        axes = (-3, -2, -1)
        psi_k = sfft.fftn(psi, axes=axes, overwrite_x=True)
        psi_k *= self.kin_phase
        return sfft.ifftn(psi_k, axes=axes, overwrite_x=True)

    def evolve(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        """Advance ``n_steps`` full Strang steps; the input array may be overwritten."""
        if n_steps <= 0:
            return psi
        psi = np.ascontiguousarray(psi, dtype=complex)
        self._apply_phase(psi, 0.5)
        for i in range(n_steps):
            psi = self._kinetic(psi)
            self._apply_phase(psi, 1.0 if i < n_steps - 1 else 0.5)
        if not np.all(np.isfinite(psi)):
            raise TrajectoryError("non-finite field values; reduce dt")
        return psi

    def step_split(self, psi: np.ndarray) -> np.ndarray:
        return self.evolve(psi, 1)


def field_energy(psi: np.ndarray, grid: LatticeGrid, potential: np.ndarray, g: float) -> np.ndarray:
    """sum_r dV [psi^* h0 psi + (g/2)|psi|^4] over the grid axes."""
    dens = psi.real**2 + psi.imag**2
    kin = np.real(np.conj(psi) * grid.kinetic(psi))
    total = kin + (potential + 0.5 * g * dens) * dens
    return total.reshape(total.shape[:-3] + (-1,)).sum(-1) * grid.cell_volume


@dataclasses.dataclass
class TrajectoryRecord:
    """Spin moments of a batch of trajectories at the sampled times, shape (n_traj, n_times)."""

    times: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    energy: np.ndarray | None = None

    @classmethod
    def concatenate(cls, records: list["TrajectoryRecord"]) -> "TrajectoryRecord":
        fields = {}
        for f in ("s_x", "s_y", "s_z", "n_a", "n_b", "energy"):
            parts = [getattr(r, f) for r in records]
            fields[f] = None if any(p is None for p in parts) else np.concatenate(parts, axis=0)
        return cls(records[0].times, **fields)

    @property
    def n_traj(self) -> int:
        return self.s_x.shape[0]


def run_trajectory(psi_a: np.ndarray, psi_b: np.ndarray, propagator: SplitStepPropagator,
                   t_max: float, sample_stride: int = 50, track_energy: bool = False,
                   keep_final: bool = False):
    """Evolve post-pulse fields (single or batched) and record spin moments.

    Returns a :class:`TrajectoryRecord` (and the final fields when
    ``keep_final``); moments are sampled every ``sample_stride`` steps
    including t = 0.
    """
    grid = propagator.grid
    single = psi_a.ndim == 3
    a = psi_a[None] if single else psi_a
    b = psi_b[None] if single else psi_b
    batch = a.shape[0]
    psi = np.empty((2 * batch,) + grid.shape, dtype=complex)
    psi[0::2] = a
    psi[1::2] = b
    n_samples = int(round(t_max / (propagator.dt * sample_stride)))
    times = np.arange(n_samples + 1) * sample_stride * propagator.dt
    out = {k: np.empty((batch, n_samples + 1)) for k in ("s_x", "s_y", "s_z", "n_a", "n_b")}
    energy = np.empty((batch, n_samples + 1)) if track_energy else None

    def record(i):
        m = spin_components(psi[0::2], psi[1::2], grid)
        for k in out:
            out[k][:, i] = getattr(m, k)
        if track_energy:
            e = field_energy(psi, grid, propagator.potential, propagator.g)
            energy[:, i] = e[0::2] + e[1::2]

    record(0)
    for i in range(1, n_samples + 1):
        psi = propagator.evolve(psi, sample_stride)
        record(i)
    rec = TrajectoryRecord(times, energy=energy, **out)
    if keep_final:
        return rec, (psi[0::2], psi[1::2])
    return rec


# ---------------------------------------------------------------------------
# ensemble statistics

@dataclasses.dataclass
class SqueezingCurve:
    times: np.ndarray
    xi2: np.ndarray
    xi2_stderr: np.ndarray
    var_sy: np.ndarray
    var_sz: np.ndarray
    cov_yz: np.ndarray
    mean_s: np.ndarray  # (n_times, 3)
    mean_abs_s: np.ndarray
    delta_perp2: np.ndarray
    n_traj: int
    n_atoms: float
    flagged: np.ndarray
    t_rescaled: np.ndarray | None = None

    @property
    def mean_sx(self) -> np.ndarray:
        return self.mean_s[:, 0]


def _perp_variance(sx, sy, sz, axis=0):
    """Minimal variance of S perpendicular to <S>, with the covariance form of
    Delta S_perp^2 = (1/2)[<Sy'^2> + <Sz'^2> - |<(Sy' + i Sz')^2>|]."""
    m = np.stack([sx.mean(axis), sy.mean(axis), sz.mean(axis)], axis=-1)
    norm = np.linalg.norm(m, axis=-1)
    e1 = m / norm[..., None]
    # a fixed reference not parallel to e1 builds the perpendicular frame
    ref = np.where(np.abs(e1[..., 2:3]) < 0.9, np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))
    e3 = ref - np.sum(ref * e1, -1, keepdims=True) * e1
    e3 /= np.linalg.norm(e3, axis=-1, keepdims=True)
    e2 = np.cross(e3, e1)
    s = np.stack([sx, sy, sz], axis=-1)
    y = np.sum(s * np.expand_dims(e2, axis), -1)
    z = np.sum(s * np.expand_dims(e3, axis), -1)
    y = y - y.mean(axis, keepdims=True)
    z = z - z.mean(axis, keepdims=True)
    vy = (y**2).mean(axis)
    vz = (z**2).mean(axis)
    c = (y * z).mean(axis)
    w = (y + 1j * z) ** 2
    dperp = 0.5 * (vy + vz - np.abs(w.mean(axis)))
    return dperp, vy, vz, c, m, norm


def ensemble_xi2(record: TrajectoryRecord, n_atoms: float, *, t_rescale: float | None = None,
                 jackknife_blocks: int | None = None, degenerate_tol: float = 1e-3) -> SqueezingCurve:
    """xi^2(t) = N Delta S_perp^2 / |<S>|^2 with delete-one (or block) jackknife errors."""
    n = record.n_traj
    if n < 2:
        raise ValueError("need at least two trajectories")
    sx, sy, sz = record.s_x, record.s_y, record.s_z
    dperp, vy, vz, c, m, norm = _perp_variance(sx, sy, sz)
    xi2 = n_atoms * dperp / norm**2
    flagged = norm < degenerate_tol * 0.5 * n_atoms
    nb = n if jackknife_blocks is None else min(jackknife_blocks, n)
    blocks = np.array_split(np.arange(n), nb)
    jk = np.empty((nb, xi2.size))
    keep = np.ones(n, bool)
    for i, idx in enumerate(blocks):
        keep[:] = True
        keep[idx] = False
        d, *_rest, nrm = _perp_variance(sx[keep], sy[keep], sz[keep])
        jk[i] = n_atoms * d / nrm**2
    stderr = np.sqrt((nb - 1) / nb * np.sum((jk - jk.mean(0)) ** 2, axis=0))
    mean_abs = np.sqrt(sx**2 + sy**2 + sz**2).mean(0)
    return SqueezingCurve(record.times, xi2, stderr, vy, vz, c, m, mean_abs, dperp, n, n_atoms,
                          flagged, None if t_rescale is None else record.times * t_rescale)


@dataclasses.dataclass
class MinimumInfo:
    xi2_min: float
    xi2_stderr: float
    t_best: float
    plateau_width: float
    index: int
    interior: bool


def extract_min(curve, times=None, threshold: float = 1.1) -> MinimumInfo:
    """Minimum of the sampled curve and the width of the region around it with
    xi^2 <= threshold * xi^2_min."""
    if isinstance(curve, SqueezingCurve):
        times, xi2, err, flagged = curve.times, curve.xi2, curve.xi2_stderr, curve.flagged
    else:
        xi2 = np.asarray(curve, float)
        err = np.full(xi2.shape, np.nan)
        flagged = np.zeros(xi2.shape, bool)
        times = np.arange(xi2.size, dtype=float) if times is None else np.asarray(times, float)
    valid = ~flagged & np.isfinite(xi2)
    masked = np.where(valid, xi2, np.inf)
    k = int(np.argmin(masked))
    interior = 0 < k < xi2.size - 1
    if not interior:
        warnings.warn("xi^2(t) has no interior minimum; reporting the endpoint")
    limit = threshold * xi2[k]
    lo = k
    while lo > 0 and valid[lo - 1] and xi2[lo - 1] <= limit:
        lo -= 1
    hi = k
    while hi < xi2.size - 1 and valid[hi + 1] and xi2[hi + 1] <= limit:
        hi += 1
    return MinimumInfo(float(xi2[k]), float(err[k]), float(times[k]), float(times[hi] - times[lo]), k, interior)


def condensate_phases(psi: np.ndarray, phi: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    """theta = arg sum_r dV Phi psi per field."""
    return np.angle(grid.dot(phi, psi))


@dataclasses.dataclass
class DiagnosticEstimate:
    xi2: float
    stderr: float
    max_phase_difference: float


def xi2_asymptotic_diagnostic(psi_a: np.ndarray, psi_b: np.ndarray, phi: np.ndarray,
                              grid: LatticeGrid, phase_limit: float = 0.9 * math.pi) -> DiagnosticEstimate:
    """1 - <dtheta dN>^2 / (<dtheta^2><dN^2>) from fields at one late time.

    Fields are batched along the first axis. Raises if the relative phase
    comes close to the branch cut.
    """
    theta = np.angle(grid.dot(phi, psi_a) * np.conj(grid.dot(phi, psi_b)))
    dn = grid.norm(psi_a) - grid.norm(psi_b)
    return phase_number_estimate(theta, dn, phase_limit)


def phase_number_estimate(theta: np.ndarray, dn: np.ndarray,
                          phase_limit: float = 0.9 * math.pi) -> DiagnosticEstimate:
    theta = np.asarray(theta, float)
    dn = np.asarray(dn, float)
    worst = float(np.max(np.abs(theta)))
    if worst > phase_limit:
        raise ValueError(f"relative phase reaches {worst:.3f} rad; use an earlier time")

    def est(th, d):
        th = th - th.mean()
        d = d - d.mean()
        return 1.0 - np.mean(th * d) ** 2 / (np.mean(th**2) * np.mean(d**2))

    n = theta.size
    value = est(theta, dn)
    keep = np.ones(n, bool)
    jk = np.empty(n)
    for i in range(n):
        keep[i] = False
        jk[i] = est(theta[keep], dn[keep])
        keep[i] = True
    err = math.sqrt((n - 1) / n * np.sum((jk - jk.mean()) ** 2))
    return DiagnosticEstimate(float(value), err, worst)


# ---------------------------------------------------------------------------
# output

def write_curve_csv(path: str | os.PathLike, curve: SqueezingCurve) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    t_res = curve.t_rescaled if curve.t_rescaled is not None else np.full(curve.times.shape, np.nan)
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "t_rescaled", "xi2", "xi2_stderr", "var_sy", "var_sz", "mean_sx"])
        for row in zip(curve.times, t_res, curve.xi2, curve.xi2_stderr, curve.var_sy,
                       curve.var_sz, curve.mean_sx):
            w.writerow([repr(float(x)) for x in row])
    os.replace(tmp, path)
    return path


def read_curve_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
