"""Local density approximation for the minimal squeezing parameter.

Each point of the trapped gas is treated as a homogeneous gas at the local
chemical potential mu_hom = mu_Phi - U(r). Inside the condensate (mu_hom > 0)
the homogeneous quantity rho xi^2 is the continuum version of the quantum
Bogoliubov mode sum,

    (rho xi^2)_hom = int d^3k/(2 pi)^3 d^2 [(1 + 2 v^2) n_B(eps) + v^2],

with eps = [E (E + 2 mu_hom)]^(1/2), d = E/eps, E = k^2/2. Outside it is the
ideal Bose gas density (xi^2_hom = 1).
"""
from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
from scipy import integrate

from .ground_state import mu_from_gamma
from .lattice import PhysicalConfig, thermal_wavelength
from .semiclassical import bose_g

ZETA_3_2 = 2.612375348685488


class QuadratureError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class HomogeneousPoint:
    mu_hom: float
    rho: float
    rho_xi2: float


def _quad(fun, a, b, epsrel, limit=200):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fun, a, b, epsabs=0.0, epsrel=epsrel, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def _bogoliubov_y(y, a):
    """eps/k_BT, d, v^2 and u^2 + v^2 at E = y k_BT with a = mu_hom/k_BT,
    written without cancellation."""
    s = math.sqrt(y * (y + 2 * a))
    vv = a * a / (2 * s * (y + a + s))
    return s, y / s, vv, (y + a) / s


def _bose(y):
    """1/(e^y - 1) for y > 0."""
    return 1 / math.expm1(y) if y < 700 else 0.0


def homogeneous_rho_xi2(mu_hom: float, temperature: float, g: float | None = None,
                        epsrel: float = 1e-10) -> HomogeneousPoint:
    """(rho xi^2)_hom and the density at local chemical potential ``mu_hom``.

    For mu_hom > 0 the density is mu_hom/g plus the Bogoliubov depletion
    (thermal and quantum); it is NaN if ``g`` is not given, since rho xi^2
    itself does not need it.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    lam = thermal_wavelength(temperature)
    if mu_hom <= 0:
        rho = bose_g(1.5, math.exp(mu_hom / temperature)) / lam**3
        return HomogeneousPoint(mu_hom, rho, rho)
    a = mu_hom / temperature
    # d^3k/(2 pi)^3 = sqrt(2 E) dE / (2 pi^2), E = y k_B T; y = w^2 removes the
    # w^(-1/2)-type behaviour at the origin
    pref = math.sqrt(2.0) * temperature**1.5 / (2 * math.pi**2)

    def xi_part(w):
        if w == 0:
            return 0.0
        s, d, vv, _ = _bogoliubov_y(w * w, a)
        return 2 * w * w * d * d * ((1 + 2 * vv) * _bose(s) + vv)

    def depletion(w):
        if w == 0:
            return 0.0
        s, _, vv, uv = _bogoliubov_y(w * w, a)
        return 2 * w * w * (uv * _bose(s) + vv)

    # thermal weight below y ~ 40, Bogoliubov structure around y ~ a
    edges = sorted({0.0, 1.0, 40.0, min(a, 1e6), min(10 * a, 1e7)})
    edges = [math.sqrt(e) for e in edges] + [math.inf]
    pieces = list(zip(edges[:-1], edges[1:]))
    rho_xi2 = pref * sum(_quad(xi_part, lo, hi, epsrel) for lo, hi in pieces)
    if g is None:
        rho = math.nan
    else:
        rho = mu_hom / g + pref * sum(_quad(depletion, lo, hi, epsrel) for lo, hi in pieces)
    return HomogeneousPoint(mu_hom, rho, rho_xi2)


def lda_n_xi2(mu: float, temperature: float, omega: float = 1.0, epsrel: float = 1e-8) -> float:
    """(N xi^2)_LDA = int d^3r (rho xi^2)_hom[mu - omega^2 r^2/2] for an isotropic trap."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    radius = math.sqrt(2 * mu) / omega

    def shell(r):
        return 4 * math.pi * r * r * homogeneous_rho_xi2(mu - 0.5 * omega**2 * r * r, temperature,
                                                         epsrel=epsrel * 1e-2).rho_xi2

    # outside R the ideal-gas density falls off over a few thermal lengths k_B T/(omega^2 R)
    r_out = math.sqrt(2 * (mu + 60 * temperature)) / omega
    inside = _quad(shell, 0.0, radius, epsrel)
    outside = _quad(shell, radius, r_out, epsrel)
    return inside + outside


def f_lda(t_ratio: float, mu: float = 10.0, epsrel: float = 1e-8) -> float:
    """xi^2_LDA / gamma, the LDA counterpart of the semiclassical f = f_ext + f_mix.

    Independent of N, gamma and mu: with mu^3 = 15 N gamma (pi/8)^(1/2), both
    (N xi^2)_LDA and N scale as mu^3/gamma at fixed k_B T/mu.
    """
    n_xi2 = lda_n_xi2(mu, t_ratio * mu, epsrel=epsrel)
    return 15 * math.sqrt(math.pi / 8) * n_xi2 / mu**3


def lda_xi2(config: PhysicalConfig, epsrel: float = 1e-8) -> float:
    """xi^2_LDA for the configuration's N, gamma and k_B T/mu_Phi (Thomas-Fermi mu_Phi)."""
    if config.trap.kind != "harmonic":
        raise ValueError("LDA is implemented for the isotropic harmonic trap only")
    omega = config.trap.omega
    mu = mu_from_gamma(config.n_atoms, config.gamma)
    return lda_n_xi2(mu * omega, config.t_ratio * mu * omega, omega, epsrel) / config.n_atoms


def lda_curve(t_ratios, epsrel: float = 1e-8) -> np.ndarray:
    return np.array([f_lda(float(t), epsrel=epsrel) for t in t_ratios])


__all__ = ["HomogeneousPoint", "QuadratureError", "homogeneous_rho_xi2", "lda_n_xi2", "f_lda",
           "lda_xi2", "lda_curve", "ZETA_3_2"]
