import math

import mpmath
import numpy as np
from hypothesis import given, settings, strategies as st

from spinsqueeze import bdg, semiclassical as sc
from spinsqueeze.dynamics import TrajectoryRecord, ensemble_xi2, extract_min, phase_number_estimate
from spinsqueeze.harness import _merge
from spinsqueeze.thermal import apply_pulse

finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1.0, 4.0), z=st.floats(0.0, 0.99))
def test_bose_series_matches_polylog(alpha, z):
    # the defining series at 40 digits; mpmath's polylog underflows for tiny z
    with mpmath.workdps(40):
        zz = mpmath.mpf(z)
        ref = float(mpmath.nsum(lambda n: zz**n / n**alpha, [1, mpmath.inf]))
    assert math.isclose(sc.bose_g(alpha, z), ref, rel_tol=1e-12, abs_tol=1e-300)


@settings(max_examples=60, deadline=None)
@given(eps=st.floats(0.02, 50.0), frac=st.floats(0.01, 0.98))
def test_closed_forms_match_quadrature(eps, frac):
    j = frac * math.sqrt(eps)
    a = sc.orbit_integrals_closed(eps, j)
    b = sc.orbit_integrals_quadrature(eps, j)
    for name in ("j1", "j2", "i1", "k1"):
        assert math.isclose(getattr(a, name), getattr(b, name), rel_tol=1e-8)
    assert -1 < a.d < 0 and a.vv >= 0


@settings(max_examples=40, deadline=None)
@given(j=st.floats(1.05, 8.0), u=st.floats(0.02, 0.98))
def test_external_orbits_have_constant_integrals(j, u):
    eps = (2 * j - 1) + u * (j * j - (2 * j - 1))
    q = sc.orbit_integrals_quadrature(eps, j)
    assert math.isclose(q.d, -1.0, abs_tol=1e-6)
    assert math.isclose(q.omega_cl, 2.0, abs_tol=1e-6)


@settings(max_examples=50, deadline=None)
@given(k2=st.floats(1e-3, 1e3), mu=st.floats(1e-2, 50.0))
def test_bogoliubov_derivative_in_mu(k2, mu):
    # complex step: eps(mu) is analytic, so Im eps(mu + ih)/h has no cancellation
    h = 1e-30
    slope = bdg.homogeneous_bogoliubov(np.array([k2]), mu + 1j * h)[0][0].imag / h
    eps, vv, d = (float(x[0]) for x in bdg.homogeneous_bogoliubov(np.array([k2]), mu))
    assert math.isclose(slope, d, rel_tol=1e-12)
    assert eps > 0.5 * k2 and vv >= 0 and 0 < d < 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), batch=st.integers(1, 3))
def test_pulse_is_unitary(seed, batch):
    rng = np.random.default_rng(seed)
    shape = (batch, 4, 4, 4)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    a1, b1 = apply_pulse(a, b)
    before = np.sum(np.abs(a) ** 2 + np.abs(b) ** 2)
    assert math.isclose(np.sum(np.abs(a1) ** 2 + np.abs(b1) ** 2), before, rel_tol=1e-13)


def _record(sx, sy, sz):
    times = np.arange(sx.shape[1], dtype=float)
    return TrajectoryRecord(times, sx, sy, sz, np.ones_like(sx), np.ones_like(sx))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), angle=st.floats(0, 2 * math.pi), scale=st.floats(0.1, 10.0))
def test_xi2_invariant_under_rotation_and_scale(seed, angle, scale):
    rng = np.random.default_rng(seed)
    m = 64
    sx = 100 + rng.standard_normal((m, 2))
    sy = rng.standard_normal((m, 2)) * 3
    sz = 0.5 * sy + rng.standard_normal((m, 2))
    base = ensemble_xi2(_record(sx, sy, sz), 400.0).xi2
    c, s = math.cos(angle), math.sin(angle)
    rot = ensemble_xi2(_record(sx, c * sy - s * sz, s * sy + c * sz), 400.0).xi2
    scaled = ensemble_xi2(_record(scale * sx, scale * sy, scale * sz), 400.0).xi2
    assert np.allclose(rot, base, rtol=1e-9)
    assert np.allclose(scaled, base, rtol=1e-9)
    assert np.all(base >= 0)


@settings(max_examples=60, deadline=None)
@given(values=st.lists(st.floats(0.01, 10.0, **finite), min_size=3, max_size=40))
def test_extract_min_is_a_minimum(values):
    xi2 = np.array(values)
    # keep an interior minimum so no warning is raised
    xi2[0] = xi2[-1] = xi2.max() + 1
    info = extract_min(xi2)
    assert info.xi2_min == xi2.min()
    assert info.plateau_width >= 0
    assert info.interior


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), slope=st.floats(-5, 5), noise=st.floats(0.01, 3.0))
def test_phase_number_estimate_in_unit_interval(seed, slope, noise):
    rng = np.random.default_rng(seed)
    theta = rng.normal(0, 0.2, 200)
    dn = slope * theta + noise * rng.normal(0, 0.2, 200)
    est = phase_number_estimate(theta, dn)
    assert -1e-12 <= est.xi2 <= 1 + 1e-12


nested = st.recursive(st.integers() | st.text(max_size=3),
                      lambda ch: st.dictionaries(st.sampled_from("abc"), ch, max_size=3), max_leaves=8)


@settings(max_examples=60, deadline=None)
@given(base=st.dictionaries(st.sampled_from("abc"), nested, max_size=3),
       extra=st.dictionaries(st.sampled_from("abc"), nested, max_size=3))
def test_merge_prefers_later_layer(base, extra):
    out = _merge(base, extra)
    for k, v in extra.items():
        if not (isinstance(v, dict) and isinstance(base.get(k), dict)):
            assert out[k] == v
    assert _merge(out, extra) == out
