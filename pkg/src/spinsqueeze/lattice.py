"""Cubic lattice geometry, physical configuration and collective-spin observables.

Units throughout: hbar = m = omega = 1 (trap units). Energies are in units of
hbar*omega and lengths in units of the oscillator length (hbar/m omega)^(1/2).
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os
import struct
import tempfile
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as sfft

log = logging.getLogger(__name__)

# int_{[-pi,pi]^3} d^3q / q^2, frozen from two independent quadratures
# (Laplace representation 1/q^2 = int_0^inf exp(-t q^2) dt, and a 48-fold
# wedge triple integral); both agree to 1e-14.
K3_FBZ = 48.21794455992942
ZETA_3_2 = 2.612375348685488
ZETA_3 = 1.2020569031595942
# ell = CELL_CONSTANT * lambda_T
CELL_CONSTANT = K3_FBZ / (2.0 * math.pi**2 * ZETA_3_2)


@dataclasses.dataclass(frozen=True)
class TrapSpec:
    """Trapping potential U(r).

    ``kind="harmonic"`` gives U = omega^2 r^2 / 2. ``kind="tabulated"`` takes
    a radial table ``(radii, values)`` that is linearly interpolated (and held
    constant beyond the last radius).
    """

    kind: str = "harmonic"
    omega: float = 1.0
    radii: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "tabulated", "none"):
            raise ValueError(f"unknown trap kind {self.kind!r}")
        if self.kind == "harmonic" and not self.omega > 0:
            raise ValueError("trap frequency must be positive")
        if self.kind == "tabulated":
            if self.radii is None or self.values is None or len(self.radii) != len(self.values):
                raise ValueError("tabulated trap needs radii and values of equal length")

    @property
    def isotropic_harmonic(self) -> bool:
        return self.kind == "harmonic"

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * self.omega**2 * r**2
        if self.kind == "none":
            return np.zeros_like(r)
        return np.interp(r, self.radii, self.values)

    def on_grid(self, grid: "LatticeGrid") -> np.ndarray:
        x, y, z = grid.mesh
        return self.radial(np.sqrt(x**2 + y**2 + z**2))


@dataclasses.dataclass(frozen=True)
class PhysicalConfig:
    """Dimensionless definition of one experiment.

    Attributes
    ----------
    n_atoms : total atom number N
    gamma : [rho(0,0^-) a^3(0^-)]^(1/2), the gas parameter at the trap centre
    t_ratio : k_B T / mu_Phi
    trap : trapping potential
    seed : 64-bit RNG seed
    """

    n_atoms: float
    gamma: float
    t_ratio: float
    trap: TrapSpec = TrapSpec()
    seed: int = 0

    def __post_init__(self):
        if not self.n_atoms >= 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.t_ratio > 0:
            raise ValueError(f"t_ratio must be > 0, got {self.t_ratio}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def require_classical_field_regime(self):
        """The classical-field model needs k_B T > mu_Phi."""
        if self.t_ratio <= 1:
            raise ValueError(
                f"classical-field runs need t_ratio > 1 (got {self.t_ratio})")


@dataclasses.dataclass(frozen=True)
class LatticeGrid:
    """Periodic cubic lattice centred on the origin.

    Point j on an axis sits at x_j = (j - n/2) * spacing, so the grid is
    symmetric under x -> -x modulo the period. Wavevectors fill the first
    Brillouin zone [-pi/l, pi/l).
    """

    shape: tuple[int, int, int]
    spacing: tuple[float, float, float]

    def __post_init__(self):
        if len(self.shape) != 3 or len(self.spacing) != 3:
            raise ValueError("grid needs three axes")
        if any(int(n) < 2 for n in self.shape):
            raise ValueError(f"need at least 2 points per axis, got {self.shape}")
        if any(not s > 0 for s in self.spacing):
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @classmethod
    def cubic(cls, n: int, spacing: float) -> "LatticeGrid":
        return cls((n, n, n), (spacing, spacing, spacing))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_modes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple(n * s for n, s in zip(self.shape, self.spacing))

    @property
    def is_cubic(self) -> bool:
        return len(set(self.shape)) == 1 and np.ptp(self.spacing) <= 1e-14 * self.spacing[0]

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple((np.arange(n) - n // 2) * s for n, s in zip(self.shape, self.spacing))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def k_axes(self) -> tuple[np.ndarray, ...]:
        return tuple(2 * np.pi * np.fft.fftfreq(n, d=s) for n, s in zip(self.shape, self.spacing))

    @cached_property
    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.k_axes
        return kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :] ** 2

    @property
    def k_max_squared(self) -> float:
        return float(sum((np.pi / s) ** 2 for s in self.spacing))

    # unitary transforms: sum_r dV |psi|^2 == sum_k |psi_k|^2
    def to_k(self, psi: np.ndarray) -> np.ndarray:
        return sfft.fftn(psi, axes=(-3, -2, -1), norm="ortho") * math.sqrt(self.cell_volume)

    def from_k(self, psi_k: np.ndarray) -> np.ndarray:
        return sfft.ifftn(psi_k, axes=(-3, -2, -1), norm="ortho") / math.sqrt(self.cell_volume)

    def kinetic(self, psi: np.ndarray) -> np.ndarray:
        """Apply p^2/2 (parabolic dispersion restricted to the first Brillouin zone)."""
        out = sfft.ifftn(0.5 * self.k_squared * sfft.fftn(psi, axes=(-3, -2, -1)), axes=(-3, -2, -1))
        return out.real if np.isrealobj(psi) else out

    def norm(self, psi: np.ndarray) -> np.ndarray:
        """sum_r dV |psi|^2, reduced over the three grid axes."""
        return _grid_sum(psi.real**2 + psi.imag**2) * self.cell_volume

    def dot(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """<f|g> = sum_r dV f* g over the grid axes."""
        return _grid_sum(np.conj(f) * g) * self.cell_volume

    def check_same(self, other: "LatticeGrid"):
        if self != other:
            raise ValueError(f"grid mismatch: {self} vs {other}")


def _grid_sum(a: np.ndarray) -> np.ndarray:
    # Fixed reduction order per trajectory, independent of the batch size.
    a = np.asarray(a)
    return a.reshape(a.shape[:-3] + (-1,)).sum(axis=-1)


def thermal_wavelength(temperature: float) -> float:
    """lambda_T = (2 pi hbar^2 / m k_B T)^(1/2)."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    return math.sqrt(2 * math.pi / temperature)


def calibrate_cell_size(temperature: float) -> float:
    """Lattice spacing that reproduces the ideal-gas non-condensed density at mu = 0.

    Equates int_FBZ d^3k/(2pi)^3 k_B T / (k^2/2) with zeta(3/2)/lambda_T^3.
    """
    return CELL_CONSTANT * thermal_wavelength(temperature)


def default_extent(config: PhysicalConfig, mu: float) -> float:
    """Box length: 1.5x the radius where the thermal density drops to 1e-6 of
    its peak, and at least twice the Thomas-Fermi radius."""
    temperature = config.t_ratio * mu
    omega = config.trap.omega if config.trap.kind == "harmonic" else 1.0
    r_thermal = math.sqrt(2 * temperature * math.log(1e6)) / omega
    radius = math.sqrt(2 * mu) / omega
    return max(2 * 1.5 * r_thermal, 2 * radius)


def build_grid(config: PhysicalConfig, requested_extent: float | Sequence[float],
               mu: float, spacing: float | None = None) -> LatticeGrid:
    """Cubic lattice covering ``requested_extent`` (full box length per axis).

    The spacing comes from :func:`calibrate_cell_size` at k_B T = t_ratio * mu
    unless given explicitly; point counts are rounded up to even numbers.
    """
    extents = np.broadcast_to(np.asarray(requested_extent, dtype=float), (3,))
    if spacing is None:
        spacing = calibrate_cell_size(config.t_ratio * mu)
    omega = config.trap.omega if config.trap.kind == "harmonic" else 1.0
    radius = math.sqrt(2 * mu) / omega
    if np.any(extents < 2 * radius):
        raise ValueError(
            f"extent {extents.tolist()} smaller than the condensate diameter 2R = {2 * radius:.4g}")
    thermal = radius + 4 * math.sqrt(config.t_ratio * mu) / omega
    if np.any(extents < 2 * thermal):
        log.warning("box %.3g does not cover R + 4 thermal widths (%.3g); the thermal "
                    "cloud is truncated by the periodic box", extents.min(), 2 * thermal)
    shape = []
    for e in extents:
        n = math.ceil(e / spacing - 1e-9)
        shape.append(n + (n % 2))
    return LatticeGrid(tuple(shape), (spacing,) * 3)


@dataclasses.dataclass
class SpinMoments:
    """Collective spin of a two-component field (arrays for batches of fields)."""

    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray


def spin_components(psi_a: np.ndarray, psi_b: np.ndarray, grid: LatticeGrid) -> SpinMoments:
    """S_x + i S_y = sum_r dV psi_a* psi_b and S_z = (N_a - N_b)/2."""
    if psi_a.shape != psi_b.shape or psi_a.shape[-3:] != grid.shape:
        raise ValueError(f"field shapes {psi_a.shape}, {psi_b.shape} do not match grid {grid.shape}")
    s_plus = grid.dot(psi_a, psi_b)
    n_a = grid.norm(psi_a)
    n_b = grid.norm(psi_b)
    return SpinMoments(s_plus.real, s_plus.imag, 0.5 * (n_a - n_b), n_a, n_b)


# ---------------------------------------------------------------------------
# checkpoint files: 64-byte header then little-endian (re, im) float64 pairs

_MAGIC = b"SQKF"
_VERSION = 1
_HEADER = struct.Struct("<4sI3I3dI")  # magic, version, dims, spacings, n_fields
HEADER_SIZE = 64


def write_fields(path: str | os.PathLike, grid: LatticeGrid, fields: np.ndarray) -> Path:
    """Write one or more complex fields atomically (temp file then rename)."""
    fields = np.asarray(fields, dtype=np.complex128)
    if fields.shape == grid.shape:
        fields = fields[None]
    if fields.shape[-3:] != grid.shape:
        raise ValueError("fields do not match grid")
    fields = fields.reshape((-1,) + grid.shape)
    header = _HEADER.pack(_MAGIC, _VERSION, *grid.shape, *grid.spacing, fields.shape[0])
    header = header.ljust(HEADER_SIZE, b"\0")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    with os.fdopen(fd, "wb") as fh:
        fh.write(header)
        fh.write(fields.astype("<c16").tobytes())
    os.replace(tmp, path)
    return path


def read_fields(path: str | os.PathLike) -> tuple[LatticeGrid, np.ndarray]:
    raw = Path(path).read_bytes()
    magic, version, nx, ny, nz, sx, sy, sz, n_fields = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a field checkpoint")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    grid = LatticeGrid((nx, ny, nz), (sx, sy, sz))
    data = np.frombuffer(raw, dtype="<c16", offset=HEADER_SIZE)
    if data.size != n_fields * grid.n_modes:
        raise ValueError(f"{path}: truncated checkpoint")
    return grid, data.reshape((n_fields,) + grid.shape).astype(np.complex128)
