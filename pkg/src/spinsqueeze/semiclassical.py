"""WKB treatment of the Bogoliubov spectrum in an isotropic harmonic trap.

Reduced variables: eps = E/mu, j = l hbar omega/(2 mu), x = r/R with the
Thomas-Fermi radius R = (2 mu)^(1/2) and w = 1 - x^2 inside the condensate.
In these variables the radial momentum is p_r^2/(2 m mu) = F(x) with

    F = sqrt(eps^2 + w^2) - w - j^2/x^2      (x < 1)
    F = eps + 1 - x^2 - j^2/x^2              (x > 1)

and the orbit integrals are J = pi omega/omega_cl = int G/sqrt(F) dx,
I = -J d = int H/sqrt(F) dx and K = J(1 + 2<v|v>) = int dx/sqrt(F).
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import math
import warnings

import mpmath
import numpy as np
from scipy import integrate, optimize

PREFACTOR_EXTERNAL = 15 * math.sqrt(math.pi) / (2 * math.sqrt(2))
PREFACTOR_MIX = 15 * math.sqrt(2) / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Bose functions

def bose_g(alpha: float, z: float, tol: float = 1e-15) -> float:
    """g_alpha(z) = sum_{n>=1} z^n / n^alpha for 0 <= z <= 1.

    Direct summation for z <= 0.99 (the geometric tail bound
    z^(n+1)/(1-z) sets the number of terms); closer to z = 1 the series is
    too slow and mpmath's polylog is used.
    """
    z = float(z)
    if z < 0 or z > 1:
        raise ValueError(f"bose_g needs 0 <= z <= 1, got {z}")
    if z == 0:
        return 0.0
    if z <= 0.99:
        n_terms = int(math.ceil(math.log(tol * (1 - z)) / math.log(z))) + 1
        n = np.arange(1, max(n_terms, 2) + 1, dtype=float)
        terms = np.exp(n * math.log(z) - alpha * np.log(n))
        return float(np.sum(terms[::-1]))
    return float(mpmath.polylog(alpha, z))


# ---------------------------------------------------------------------------
# orbits

class OrbitKind(enum.Enum):
    EXTERNAL = "external"
    MIXED = "mixed"
    FORBIDDEN = "forbidden"


def classify_orbit(eps: float, j: float) -> OrbitKind:
    if eps > 0 and j >= 0 and j * j < eps:
        return OrbitKind.MIXED
    if 1 < 2 * j - 1 < eps < j * j:
        return OrbitKind.EXTERNAL
    return OrbitKind.FORBIDDEN


@dataclasses.dataclass(frozen=True)
class OrbitParams:
    eps: float
    j: float

    @property
    def kind(self) -> OrbitKind:
        return classify_orbit(self.eps, self.j)


@dataclasses.dataclass(frozen=True)
class OrbitIntegrals:
    j1: float
    j2: float
    i1: float
    i2: float
    k1: float
    k2: float

    @property
    def j_int(self) -> float:
        return self.j1 + self.j2

    @property
    def i_int(self) -> float:
        return self.i1 + self.i2

    @property
    def k_int(self) -> float:
        return self.k1 + self.k2

    @property
    def d(self) -> float:
        """d_k = d eps_k / d mu_Phi = -I/J."""
        return -self.i_int / self.j_int

    @property
    def omega_cl(self) -> float:
        return math.pi / self.j_int

    @property
    def vv(self) -> float:
        return 0.5 * (self.k_int / self.j_int - 1)


EXTERNAL_INTEGRALS = OrbitIntegrals(0.0, math.pi / 2, 0.0, math.pi / 2, 0.0, math.pi / 2)


def reduced_f(x, eps, j):
    x = np.asarray(x, dtype=float)
    w = 1 - x**2
    inside = np.sqrt(eps**2 + w**2) - w - j**2 / x**2
    outside = eps + 1 - x**2 - j**2 / x**2
    return np.where(x < 1, inside, outside)


def reduced_turning_points(eps: float, j: float) -> tuple[float, float]:
    """Inner (inside the condensate) and outer turning points x1 < 1 < x2 of a mixed orbit,
    or both outer roots for an external orbit."""
    kind = classify_orbit(eps, j)
    disc = (eps + 1) ** 2 - 4 * j**2
    if kind is OrbitKind.FORBIDDEN or disc < 0:
        raise ValueError(f"no classical orbit at eps={eps}, j={j}")
    x2 = math.sqrt(0.5 * ((eps + 1) + math.sqrt(disc)))
    if kind is OrbitKind.EXTERNAL:
        return math.sqrt(0.5 * ((eps + 1) - math.sqrt(disc))), x2
    x1 = math.sqrt(j**2 * (1 + math.sqrt(1 + eps**2 + 2 * j**2)) / (eps**2 + 2 * j**2)) if j > 0 else 0.0
    return x1, x2


def _quad_piece(fun, a, b, singular_at_a, epsrel):
    """int_a^b fun(x) dx where fun ~ 1/sqrt(x - a) (or 1/sqrt(b - x)) at one end.

    x = a + (b - a) sin^2(s) (or the mirror) turns the endpoint singularity
    into a smooth integrand.
    """
    if b <= a:
        return 0.0
    h = b - a
    if singular_at_a:
        def g(s):
            sn, cs = math.sin(s), math.cos(s)
            return fun(a + h * sn * sn) * 2 * h * sn * cs
    else:
        def g(s):
            sn, cs = math.sin(s), math.cos(s)
            return fun(b - h * sn * sn) * 2 * h * sn * cs
    val, err = integrate.quad(g, 0.0, math.pi / 2, epsabs=0.0, epsrel=epsrel, limit=200)
    return val


def orbit_integrals_quadrature(eps: float, j: float, epsrel: float = 1e-12) -> OrbitIntegrals:
    """J, I, K by direct quadrature of the radial integrals (split at the condensate edge)."""
    kind = classify_orbit(eps, j)
    if kind is OrbitKind.FORBIDDEN:
        raise ValueError(f"forbidden orbit eps={eps}, j={j}")
    x1, x2 = reduced_turning_points(eps, j)

    def f_in(x):
        w = 1 - x * x
        return math.sqrt(eps * eps + w * w) - w - (j * j / (x * x) if j > 0 else 0.0)

    def f_out(x):
        return eps + 1 - x * x - j * j / (x * x)

    def pos(v):
        return max(v, 1e-300)

    if kind is OrbitKind.EXTERNAL:
        out = [_quad_piece(lambda x: 1 / math.sqrt(pos(f_out(x))), x1, 0.5 * (x1 + x2), True, epsrel)
               + _quad_piece(lambda x: 1 / math.sqrt(pos(f_out(x))), 0.5 * (x1 + x2), x2, False, epsrel)]
        j2 = out[0]
        return OrbitIntegrals(0.0, j2, 0.0, j2, 0.0, j2)

    def inner(kernel):
        def fun(x):
            w = 1 - x * x
            return kernel(w) / math.sqrt(pos(f_in(x)))
        # for j = 0 there is no inner turning point and the integrand is regular at 0
        return _quad_piece(fun, x1, 1.0, j > 0, epsrel)

    def outer(kernel_value):
        return _quad_piece(lambda x: kernel_value / math.sqrt(pos(f_out(x))), 1.0, x2, False, epsrel)

    j1 = inner(lambda w: eps / math.sqrt(eps * eps + w * w))
    i1 = inner(lambda w: w / math.sqrt(eps * eps + w * w) - 1)
    k1 = inner(lambda w: 1.0)
    j2 = outer(1.0)
    return OrbitIntegrals(j1, j2, i1, j2, k1, j2)


def _clamp(v, lo, hi, slack=1e-12):
    if v < lo - slack or v > hi + slack:
        raise ValueError(f"argument {v} outside [{lo}, {hi}]: orbit misclassified")
    return min(max(v, lo), hi)


def orbit_integrals_closed(eps, j) -> OrbitIntegrals:
    """Closed forms for mixed orbits (0 < j^2 < eps); external orbits return the constants."""
    if classify_orbit(eps, j) is OrbitKind.EXTERNAL:
        return EXTERNAL_INTEGRALS
    if not (eps > 0 and 0 <= j * j < eps):
        raise ValueError(f"not a mixed orbit: eps={eps}, j={j}")
    s = 2 * j * j + eps * eps
    j1 = (eps / math.sqrt(2)) / math.sqrt(s) * math.acos(
        _clamp((s - eps) / (eps * math.sqrt(s + 1)), -1, 1))
    j2 = 0.5 * math.acos(_clamp((1 - eps) / math.sqrt((1 + eps) ** 2 - 4 * j * j), -1, 1))
    i1 = -math.acosh(_clamp((1 + eps) / math.sqrt(s + 1), 1, math.inf)) / math.sqrt(2)
    k1 = eps * (j1 + math.sqrt(eps - j * j)) / (2 * s) - i1 / 2
    return OrbitIntegrals(j1, j2, i1, j2, k1, j2)


def _closed_arrays(eps, j):
    """Vectorised closed forms (mixed domain assumed): returns J, I, K arrays."""
    s = 2 * j * j + eps * eps
    a1 = np.clip((s - eps) / (eps * np.sqrt(s + 1)), -1, 1)
    j1 = eps / np.sqrt(2 * s) * np.arccos(a1)
    j2 = 0.5 * np.arccos(np.clip((1 - eps) / np.sqrt((1 + eps) ** 2 - 4 * j * j), -1, 1))
    i1 = -np.arccosh(np.maximum((1 + eps) / np.sqrt(s + 1), 1.0)) / math.sqrt(2)
    k1 = eps * (j1 + np.sqrt(np.maximum(eps - j * j, 0))) / (2 * s) - i1 / 2
    return j1 + j2, i1 + j2, k1 + j2


# ---------------------------------------------------------------------------
# physical-unit WKB (omega = 1)

def _w_tf(r, mu, thomas_fermi):
    if not thomas_fermi:
        return np.zeros_like(np.asarray(r, float))
    return np.maximum(mu - 0.5 * np.asarray(r, float) ** 2, 0.0)


def _pr2_half(r, e, mu, l, thomas_fermi=True, langer=False):
    r = np.asarray(r, float)
    w = _w_tf(r, mu, thomas_fermi)
    lam2 = (l + 0.5) ** 2 if langer else float(l) ** 2
    return np.sqrt(e * e + w * w) - (lam2 / (2 * r * r) + 2 * w + 0.5 * r * r - mu)


def radial_momentum(r, e, mu, l, *, thomas_fermi=True, langer=False):
    """p_r >= 0 with p_r^2/2 = sqrt(E^2 + W^2) - [l^2/2r^2 + 2W + U - mu]; zero where forbidden."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("r must be positive")
    return np.sqrt(2 * np.maximum(_pr2_half(r, e, mu, l, thomas_fermi, langer), 0.0))


def turning_points(e, mu, l, *, thomas_fermi=True, langer=False, n_scan=4000):
    """(r1, r2) bracketing the classically allowed interval, by scanning and brentq.

    For l = 0 without the Langer term r1 = 0 (no centrifugal barrier).
    """
    r_max = math.sqrt(2 * (e + mu)) + 1.0
    rs = np.linspace(r_max * 1e-6, r_max, n_scan)
    f = _pr2_half(rs, e, mu, l, thomas_fermi, langer)
    pos = np.nonzero(f > 0)[0]
    if pos.size == 0:
        raise ValueError(f"no classically allowed region at E={e}, l={l}")
    g = functools.partial(_pr2_half, e=e, mu=mu, l=l, thomas_fermi=thomas_fermi, langer=langer)
    i0, i1 = pos[0], pos[-1]
    if np.any(np.diff(pos) != 1):
        warnings.warn("allowed region is not a single interval; using its outer envelope")
    r1 = 0.0 if i0 == 0 else optimize.brentq(g, rs[i0 - 1], rs[i0], xtol=1e-15, rtol=1e-15)
    r2 = optimize.brentq(g, rs[i1], rs[i1 + 1], xtol=1e-15, rtol=1e-15)
    return r1, r2


def radial_action(e, mu, l, *, thomas_fermi=True, langer=True, epsrel=1e-11):
    """int_{r1}^{r2} p_r dr, split at the Thomas-Fermi radius when it lies inside."""
    r1, r2 = turning_points(e, mu, l, thomas_fermi=thomas_fermi, langer=langer)

    def p(r):
        return math.sqrt(2 * max(float(_pr2_half(r, e, mu, l, thomas_fermi, langer)), 0.0))

    def piece(a, b):
        h = b - a

        def g(s):
            sn = math.sin(s)
            return p(a + h * sn * sn) * 2 * h * sn * math.cos(s)
        return integrate.quad(g, 0, math.pi / 2, epsabs=0, epsrel=epsrel, limit=200)[0]

    radius = math.sqrt(2 * mu) if thomas_fermi else -1.0
    if r1 < radius < r2:
        return piece(r1, radius) + piece(radius, r2)
    return piece(r1, r2)


def bohr_sommerfeld_energy(n: int, l: int, mu: float, *, thomas_fermi: bool = True,
                           langer: bool = True, e_max: float | None = None) -> float:
    """eps_{n,l} from pi (n + 1/2) = int p_r dr (omega = 1).

    ``langer`` replaces l^2 by (l + 1/2)^2 in the centrifugal term, which makes
    the rule exact for the bare harmonic oscillator.
    """
    if n < 0 or l < 0:
        raise ValueError("quantum numbers must be non-negative")
    target = math.pi * (n + 0.5)
    lo = 1e-9
    hi = e_max if e_max is not None else max(2.0, 2 * n + l + 2.0)

    def action(e):
        try:
            return radial_action(e, mu, l, thomas_fermi=thomas_fermi, langer=langer)
        except ValueError:
            return 0.0

    while action(hi) < target:
        hi *= 2
        if hi > 1e7:
            raise ValueError("quantisation root not bracketed")
    if action(lo) > target:
        raise ValueError("quantisation root not bracketed from below")
    return optimize.brentq(lambda e: action(e) - target, lo, hi, xtol=1e-13, rtol=1e-13)


# ---------------------------------------------------------------------------
# master curve

def f_external(t_ratio: float) -> float:
    """Contribution of purely external orbits: (15 sqrt(pi)/(2 sqrt 2)) t^3 g_3(e^{-1/t})."""
    if not t_ratio > 0:
        raise ValueError("t_ratio must be positive")
    return PREFACTOR_EXTERNAL * t_ratio**3 * bose_g(3, math.exp(-1 / t_ratio))


def f_external_bruteforce(t_ratio: float, epsrel: float = 1e-12) -> float:
    """Same quantity by 2D integration over 1 < 2j - 1 < eps < j^2 with d = -1, <v|v> = 0."""
    pref = 8 * 15 * math.sqrt(math.pi / 8) / math.pi * (math.pi / 2)

    def inner(eps):
        lo, hi = math.sqrt(eps), 0.5 * (eps + 1)
        return 0.5 * (hi * hi - lo * lo) / math.expm1(eps / t_ratio)

    upper = 1 + 60 * t_ratio
    val = integrate.quad(inner, 1, upper, epsabs=0, epsrel=epsrel, limit=400)[0]
    return pref * val


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _mix_inner(eps: float, t_ratio: float, nodes=_GL_NODES, weights=_GL_WEIGHTS) -> float:
    """int_0^{sqrt eps} j dj (I^2/J)[(K/J) coth(eps/2t) - 1] with j = sqrt(eps) sin(phi)."""
    phi = 0.25 * math.pi * (nodes + 1)
    sn, cs = np.sin(phi), np.cos(phi)
    j = math.sqrt(eps) * sn
    jj, ii, kk = _closed_arrays(eps, j)
    coth = 1 / math.tanh(eps / (2 * t_ratio))
    integrand = (ii**2 / jj) * ((kk / jj) * coth - 1) * eps * sn * cs
    return 0.25 * math.pi * float(weights @ integrand)


# Large-eps behaviour of the inner integral once coth(eps/2t) = 1 to double
# precision: q(eps) eps^(3/2) = sum_k c_k eps^(-k/2). The closed forms lose
# about eps^(5/2) in relative precision there (K/J - 1 is a small difference of
# O(1) terms), so the coefficients were fitted to 40-digit evaluations of the
# same 64-node rule on 30 <= eps <= 1e8 (max relative misfit 5e-10).
# The leading coefficient is 4/105.
TAIL_COEFFS = (0.03809523809242612, -0.08488263353900333, 0.03533501064097167,
               0.038816508602294644, -0.029877848944920193, 0.022982493077752242,
               -0.027783405763566384)
TAIL_FIT_MIN = 30.0


def mix_inner_asymptotic(eps: float) -> float:
    """Fitted zero-temperature inner integral, valid for eps >= 30."""
    return sum(c * eps ** (-1.5 - 0.5 * k) for k, c in enumerate(TAIL_COEFFS))


def mix_tail(eps_max: float) -> float:
    """int_{eps_max}^inf of the fitted inner integral."""
    if eps_max < TAIL_FIT_MIN:
        raise ValueError(f"tail fit only valid above eps = {TAIL_FIT_MIN}")
    return sum(c * eps_max ** (-0.5 - 0.5 * k) / (0.5 + 0.5 * k) for k, c in enumerate(TAIL_COEFFS))


def f_mix(t_ratio: float, eps_max: float | None = None, epsrel: float = 1e-10,
          include_tail: bool = True) -> float:
    """Mixed-orbit double integral.

    The outer integral is done adaptively up to ``eps_max`` (default
    50 max(1, t)); beyond it the thermal factor is exactly one and the slowly
    decaying (eps^-3/2) remainder is added from its fitted asymptotic form.
    """
    if not t_ratio > 0:
        raise ValueError("t_ratio must be positive")
    if eps_max is None:
        eps_max = 50 * max(1.0, t_ratio)
    if include_tail and (eps_max < 40 * t_ratio or eps_max < TAIL_FIT_MIN):
        raise ValueError("eps_max must exceed both 40 t_ratio and 30 for the tail correction")
    if eps_max > 2e3:
        warnings.warn("closed forms lose precision above eps ~ 1e3; prefer a smaller eps_max")

    def outer(e):
        return _mix_inner(e, t_ratio)

    edges = [0.0, 1.0] + [e for e in (10.0, 100.0) if e < eps_max] + [eps_max]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            if b > 1e3:
                # roundoff of the closed forms, already bounded above
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
            total += integrate.quad(outer, a, b, epsabs=0, epsrel=epsrel, limit=500)[0]
    if include_tail:
        total += mix_tail(eps_max)
    return PREFACTOR_MIX * total


@dataclasses.dataclass(frozen=True)
class SemiclassicalPoint:
    t_over_mu: float
    f_ext: float
    f_mix: float

    @property
    def f_total(self) -> float:
        return self.f_ext + self.f_mix


def master_curve(t_ratios, eps_max: float | None = None) -> list[SemiclassicalPoint]:
    """f(k_B T/mu_Phi) = xi^2_min / gamma in the thermodynamic limit."""
    out = []
    for t in t_ratios:
        if not t > 0:
            raise ValueError("all t_ratios must be positive")
        out.append(SemiclassicalPoint(float(t), f_external(t), f_mix(t, eps_max)))
    return out


def headline_inverse_xi(n_atoms: float, mu: float, t_ratio: float) -> float:
    """1/xi_min from the master curve for given N, mu_Phi/hbar omega and k_B T/mu_Phi."""
    from .ground_state import gamma_from_mu
    gamma = gamma_from_mu(n_atoms, mu)
    p = master_curve([t_ratio])[0]
    return 1 / math.sqrt(gamma * p.f_total)
