import math

import numpy as np
import pytest

from heteroclinic.coefficients import build_coefficient
from heteroclinic.orlicz import build_truncated
from heteroclinic.potentials import build_potential
from heteroclinic.strip import Grid


def adaptive_simpson(f, a, b, tol=1e-13, depth=60):
    """Independent quadrature oracle (recursive Simpson with Richardson correction)."""
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)


def varphi_reference(u, L):
    """Piecewise slope density written out from the printed definition."""
    xL = math.sqrt(1 + L) / (4 * (1 + L) ** 2)
    yL = (4 * L + 3) * xL
    if u <= L:
        return 1.0 / math.sqrt(1.0 + u)
    if u <= L + 1:
        return xL * (u - L - 1) ** 2 + yL
    return yL


def Phi_L_quadrature(t, L):
    """Phi_L(t) = int_0^t s varphi_L(s^2) ds, split at the junctions."""
    t = abs(t)
    knots = [0.0] + [k for k in (math.sqrt(L), math.sqrt(L + 1)) if k < t] + [t]
    f = lambda s: s * varphi_reference(s * s, L)
    return sum(adaptive_simpson(f, a, b) for a, b in zip(knots, knots[1:]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def nf1():
    return build_truncated(1.0)


@pytest.fixture
def gl01():
    return build_potential("ginzburg-landau", -0.1, 0.1)


@pytest.fixture
def A1():
    return build_coefficient(1, "constant")


@pytest.fixture
def small_grid(gl01):
    return Grid.for_potential(4.0, 64, 8, gl01)
