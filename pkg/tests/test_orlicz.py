import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heteroclinic.orlicz import (ConvergenceError, build_custom, build_power, build_truncated,
                                 complementary_value, growth_slack, legendre_maximizer,
                                 luxemburg_norm, mean_curvature, quasi_triangle_slack,
                                 sandwich_slack, supporting_slack, truncation_constants,
                                 young_slack)

from conftest import Phi_L_quadrature, varphi_reference


# ---------------------------------------------------------------- power family

def test_power_values():
    assert build_power(2).Phi(3.0) == 4.5
    assert build_power(2).Phi(0.0) == 0.0
    assert build_power(3).Phi(2.0) == pytest.approx(8.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0])
def test_power_rejects_small_exponent(p):
    with pytest.raises(ValueError):
        build_power(p)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_power_exponents_equal_p(p):
    nf = build_power(p)
    assert nf.l == nf.m == p


# ---------------------------------------------------------------- truncation

def test_truncation_constants_high_precision():
    mpmath.mp.dps = 40
    L = mpmath.mpf(1)
    xL = mpmath.sqrt(1 + L) / (4 * (1 + L) ** 2)
    yL = (4 * L + 3) * xL
    x, y = truncation_constants(1.0)
    assert abs(x - float(xL)) < 1e-16
    assert abs(y - float(yL)) < 1e-16
    assert x == pytest.approx(0.08838835, abs=5e-9)
    assert y == pytest.approx(0.61871843, abs=5e-9)


def test_truncated_examples():
    nf = build_truncated(1.0)
    assert nf.phi(0.0) == 1.0
    assert nf.Phi(1.0) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert nf.Phi(2.0) == pytest.approx(1.357023, abs=5e-7)
    assert nf.Phi(2.0) == pytest.approx(Phi_L_quadrature(2.0, 1.0), abs=1e-12)


@pytest.mark.parametrize("L", [0.0, -1.0])
def test_truncated_rejects_nonpositive_level(L):
    with pytest.raises(ValueError):
        build_truncated(L)


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_truncated_even_and_increasing(L):
    nf = build_truncated(L)
    t = np.linspace(0, 10, 2001)
    assert np.array_equal(nf.Phi(t), nf.Phi(-t))
    assert np.all(np.diff(nf.Phi(t)) > 0)
    # midpoint convexity
    a, b = t[:-1], t[1:]
    assert np.all(nf.Phi(0.5 * (a + b)) <= 0.5 * (nf.Phi(a) + nf.Phi(b)) + 1e-15)


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_dPhi_matches_finite_difference(L):
    nf = build_truncated(L)
    t = np.linspace(0.05, 5, 97)
    h = 1e-6
    fd = (nf.Phi(t + h) - nf.Phi(t - h)) / (2 * h)
    assert np.max(np.abs(fd - nf.dPhi(t))) < 1e-8


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_phi_prime_matches_finite_difference(L):
    nf = build_truncated(L)
    t = np.linspace(0.05, 5, 97)
    h = 1e-6
    fd = (nf.phi(t + h) - nf.phi(t - h)) / (2 * h)
    # skip points whose stencil straddles a junction (phi' is only continuous there)
    keep = (np.abs(t ** 2 - L) > 1e-3) & (np.abs(t ** 2 - L - 1) > 1e-3)
    assert np.max(np.abs(fd - t * nf.phi_prime_over_t(t))[keep]) < 1e-7


def test_mean_curvature_operator():
    mc = mean_curvature()
    t = np.linspace(0, 3, 7)
    assert np.allclose(mc.phi(t), 1 / np.sqrt(1 + t * t), rtol=0, atol=1e-16)
    with pytest.raises(ConvergenceError):
        complementary_value(mc, 2.0)  # linear growth: no maximiser


# ---------------------------------------------------------------- conjugate

def test_conjugate_quadratic():
    assert complementary_value(build_power(2), 3.0) == pytest.approx(4.5, rel=1e-15)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_conjugate_power_at_one(p):
    q = p / (p - 1)
    assert complementary_value(build_power(p), 1.0) == pytest.approx(1 / q, rel=1e-14)


@pytest.mark.parametrize("nf", [build_power(3), build_truncated(1.0)])
def test_conjugate_at_zero(nf):
    assert complementary_value(nf, 0.0) == 0.0


def test_conjugate_negative_rejected():
    with pytest.raises(ValueError):
        complementary_value(build_truncated(1.0), -1.0)


def test_custom_power_conjugate_matches_closed_form():
    # custom family has no closed form: the root-based path must reproduce |s|^q/q
    nf = build_custom(lambda t: np.abs(t))
    for s in (0.3, 1.0, 2.5):
        assert complementary_value(nf, s) == pytest.approx(s ** 1.5 / 1.5, rel=1e-7)


# ---------------------------------------------------------------- Luxemburg

def test_luxemburg_examples():
    assert luxemburg_norm(build_power(2), [1.0], [1.0]) == pytest.approx(2 ** -0.5, rel=1e-10)
    assert luxemburg_norm(build_power(3), [2.0], [1.0]) == pytest.approx(2 * 3 ** (-1 / 3), rel=1e-10)
    assert luxemburg_norm(build_power(3), [0.0, 0.0], [0.5, 0.5]) == 0.0


@settings(max_examples=40, deadline=None)
@given(p=st.sampled_from([1.5, 2.0, 3.0]),
       u=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12))
def test_luxemburg_power_scaling(p, u):
    # ||u||_{Phi_p} = p^{-1/p} ||u||_p
    u = np.asarray(u)
    w = np.full(u.shape, 1.0 / len(u))
    # scale by max|u| so subnormal inputs do not underflow in |u|^p
    m = float(np.max(np.abs(u)))
    lp = m * float(np.sum(w * (np.abs(u) / m) ** p)) ** (1 / p) if m > 0 else 0.0
    got = luxemburg_norm(build_power(p), u, w)
    if lp == 0.0:
        assert got == 0.0
    else:
        assert got == pytest.approx(p ** (-1 / p) * lp, rel=1e-9)


def test_luxemburg_minimality():
    nf = build_truncated(1.0)
    rng = np.random.default_rng(3)
    u, w = rng.normal(size=50), rng.uniform(0.01, 0.05, 50)
    lam = luxemburg_norm(nf, u, w)
    assert np.sum(w * nf.Phi(np.abs(u) / lam)) <= 1.0
    assert np.sum(w * nf.Phi(np.abs(u) / (lam * (1 - 1e-9)))) > 1.0


# ---------------------------------------------------------------- inequalities

NFS = [build_power(1.5), build_power(2), build_power(3),
       build_truncated(0.25), build_truncated(1.0), build_truncated(4.0)]


@pytest.mark.parametrize("nf", NFS, ids=lambda n: f"{n.family}-{n.param}")
def test_inequalities_hold(nf):
    rng = np.random.default_rng(11)
    g = np.logspace(-3, 3, 100)
    assert sandwich_slack(nf, g, g) >= -1e-12
    assert growth_slack(nf, np.logspace(-4, 4, 10_000)) >= -1e-12
    a, b = rng.normal(scale=3, size=(2, 10_000))
    assert quasi_triangle_slack(nf, a, b) >= -1e-12
    z, w = rng.normal(scale=2, size=(2, 10_000, 2))
    assert supporting_slack(nf, z, w) >= -1e-12
    assert young_slack(nf, np.logspace(-2, 2, 100), np.logspace(-3, 3, 100)) >= -1e-12


def test_violation_detected():
    # a deliberately wrong growth exponent must show up as negative slack
    nf = build_power(3)
    fake = type(nf)(nf.phi, nf.Phi, nf.dPhi, nf.phi_prime_over_t, 3.5, 3.5, "power-p", 3.0)
    assert growth_slack(fake, np.array([1.0, 2.0])) < -0.1


def test_truncated_growth_exponents():
    # m_L = 2 is attained in the flat regime; l_L < 2 from the curvature piece
    for L in (0.25, 1.0, 4.0):
        nf = build_truncated(L)
        assert nf.m == 2.0
        assert 1.0 < nf.l < 2.0


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_lemma_bounds(L):
    nf = build_truncated(L)
    t = np.linspace(0, 10, 10_001)
    assert np.all(nf.phi(t) >= nf.yL) and np.all(nf.phi(t) <= 1.0)
    assert np.all(nf.Phi(t) >= 0.5 * nf.yL * t * t - 1e-15)
    assert np.all(nf.Phi(t) <= 0.5 * t * t + 1e-15)


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_junctions_are_c1(L):
    nf = build_truncated(L)
    for u in (L, L + 1.0):
        lo, hi = np.nextafter(u, 0), np.nextafter(u, np.inf)
        assert abs(nf.varphi(lo) - nf.varphi(hi)) < 1e-10
        # phi'(t)/t = 2 varphi'(t^2)
        dlo = nf.phi_prime_over_t(np.sqrt(lo))
        dhi = nf.phi_prime_over_t(np.sqrt(hi))
        assert abs(dlo - dhi) < 1e-10
        assert abs(nf.varphi(u) - varphi_reference(u, L)) < 1e-15


@pytest.mark.parametrize("L", [0.25, 1.0, 4.0])
def test_closed_form_against_quadrature(L):
    nf = build_truncated(L)
    for t in np.linspace(0.1, 10, 25):
        assert abs(nf.Phi(t) - Phi_L_quadrature(t, L)) < 1e-10
    small = np.linspace(0, math.sqrt(L), 501)
    assert np.max(np.abs(nf.Phi(small) - (np.sqrt(1 + small ** 2) - 1))) < 1e-12


def test_legendre_maximizer_solves_first_order_condition():
    nf = build_truncated(1.0)
    s = np.linspace(0.01, 20, 200)
    t = legendre_maximizer(nf, s)
    assert np.max(np.abs(nf.dPhi(t) - s) / s) < 1e-13
