"""N-functions of the form Phi(t) = int_0^|t| s*phi(s) ds.

Three families are provided: the power N-function ``|t|**p / p``, the
truncated mean-curvature density ``Phi_L`` (equal to ``sqrt(1+t^2) - 1``
while ``t^2 <= L`` and quadratically capped beyond ``L + 1``) and a custom
family built from a user supplied slope density.  The exact mean curvature
density is also exposed; it is not an N-function (linear growth) and is only
used as an operator when measuring residuals.

All callables are vectorised over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

FAMILY_CODES = {"power-p": 0, "truncated-mean-curvature": 1, "mean-curvature": 2}


class ConvergenceError(RuntimeError):
    """A 1-D bracketing or root search did not converge."""


@dataclass(frozen=True)
class NFunction:
    """Generator ``phi`` with derived ``Phi`` and ``dPhi``.

    ``phi_prime_over_t(t)`` is ``phi'(t)/t`` and feeds the Hessian of
    ``Phi(|g|)``, whose eigenvalues are ``phi`` and ``(phi*t)'``.
    ``l`` and ``m`` are the growth exponents with
    ``l - 1 <= (phi t)'/phi <= m - 1``.
    """

    phi: Callable
    Phi: Callable
    dPhi: Callable
    phi_prime_over_t: Callable
    l: float
    m: float
    family: str
    param: float = float("nan")
    conjugate: Optional[Callable] = field(default=None, repr=False)

    @property
    def code(self) -> int:
        return FAMILY_CODES.get(self.family, -1)

    def inverse(self, value: float) -> float:
        """Return the t >= 0 with Phi(t) = value."""
        if value < 0:
            raise ValueError("Phi takes nonnegative values only")
        if value == 0:
            return 0.0
        hi = 1.0
        for _ in range(200):
            if float(self.Phi(hi)) >= value:
                break
            hi *= 2.0
        else:
            raise ConvergenceError("could not bracket Phi^{-1}")
        return optimize.brentq(lambda t: float(self.Phi(t)) - value, 0.0, hi,
                               xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class TruncatedPhi(NFunction):
    L: float = float("nan")
    xL: float = float("nan")
    yL: float = float("nan")

    def varphi(self, u):
        """Slope density as a function of the squared gradient ``u = t^2``."""
        return _truncated_varphi(np.asarray(u, dtype=float), self.L, self.xL, self.yL)


def _exponents(phi, phi_prime_over_t, t_lo=1e-6, t_hi=1e6, n=4001):
    """inf/sup of 2 + t^2 phi'(t)/(t phi(t)) sampled on a log grid, then refined."""
    ratio = lambda t: 2.0 + t * t * phi_prime_over_t(t) / phi(t)
    ts = np.logspace(math.log10(t_lo), math.log10(t_hi), n)
    vals = ratio(ts)
    out = []
    for sign, k in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        a, b = ts[max(k - 1, 0)], ts[min(k + 1, n - 1)]
        res = optimize.minimize_scalar(lambda t: sign * float(ratio(np.float64(t))),
                                       bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-14 * b})
        best = sign * min(sign * vals[k], res.fun)
        out.append(best)
    return out[0], out[1]


def build_power(p: float) -> NFunction:
    """Phi(t) = |t|^p / p with l = m = p."""
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"power N-function needs p > 1, got {p}")
    q = p / (p - 1.0)

    def phi(t):
        t = np.abs(np.asarray(t, dtype=float))
        if p == 2.0:
            return np.ones_like(t)
        with np.errstate(divide="ignore"):
            return t ** (p - 2.0)

    def Phi(t):
        return np.abs(np.asarray(t, dtype=float)) ** p / p

    def dPhi(t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * np.abs(t) ** (p - 1.0)

    def phi_prime_over_t(t):
        t = np.abs(np.asarray(t, dtype=float))
        if p == 2.0:
            return np.zeros_like(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (p - 2.0) * t ** (p - 4.0)

    def conjugate(s):
        return np.abs(np.asarray(s, dtype=float)) ** q / q

    return NFunction(phi, Phi, dPhi, phi_prime_over_t, p, p, "power-p", p, conjugate)


def truncation_constants(L: float) -> tuple[float, float]:
    """Return (x_L, y_L)."""
    xL = math.sqrt(1.0 + L) / (4.0 * (1.0 + L) ** 2)
    return xL, (4.0 * L + 3.0) * xL


def _truncated_varphi(u, L, xL, yL):
    w = u - L - 1.0
    return np.where(u <= L, 1.0 / np.sqrt(1.0 + u),
                    np.where(u <= L + 1.0, xL * w * w + yL, yL))


def build_truncated(L: float) -> TruncatedPhi:
    """Truncated mean-curvature N-function Phi_L.

    ``phi_L(t) = varphi_L(t^2)`` where ``varphi_L`` is ``1/sqrt(1+u)`` on
    ``[0, L]``, the parabola ``x_L (u-L-1)^2 + y_L`` on ``[L, L+1]`` and the
    constant ``y_L`` afterwards.  ``Phi_L`` is the closed-form antiderivative
    ``(1/2) int_0^{t^2} varphi_L``.
    """
    L = float(L)
    if not L > 0.0:
        raise ValueError(f"truncation level must be positive, got {L}")
    xL, yL = truncation_constants(L)
    P1 = math.sqrt(1.0 + L) - 1.0
    P2 = P1 + 0.5 * (xL / 3.0 + yL)

    def phi(t):
        t = np.asarray(t, dtype=float)
        return _truncated_varphi(t * t, L, xL, yL)

    def Phi(t):
        t = np.asarray(t, dtype=float)
        u = t * t
        w = u - L - 1.0
        # t^2/(sqrt(1+t^2)+1) avoids cancellation near 0
        return np.where(u <= L, u / (np.sqrt(1.0 + u) + 1.0),
                        np.where(u <= L + 1.0,
                                 P1 + 0.5 * (xL * (w * w * w + 1.0) / 3.0 + yL * (u - L)),
                                 P2 + 0.5 * yL * w))

    def dPhi(t):
        t = np.asarray(t, dtype=float)
        return phi(t) * t

    def phi_prime_over_t(t):
        t = np.asarray(t, dtype=float)
        u = t * t
        w = u - L - 1.0
        return np.where(u <= L, -(1.0 + u) ** -1.5,
                        np.where(u <= L + 1.0, 4.0 * xL * w, 0.0))

    # only the middle piece pulls the exponent below 2; m_L = 2 from the first piece at 0
    ratio = lambda u: 2.0 + 2.0 * u * (
        np.where(u <= L, -0.5 * (1.0 + u) ** -1.5, 2.0 * xL * (u - L - 1.0))
        / _truncated_varphi(u, L, xL, yL))
    us = np.linspace(0.0, L + 1.0, 20001)
    k = int(np.argmin(ratio(us)))
    res = optimize.minimize_scalar(lambda v: float(ratio(np.float64(v))),
                                   bounds=(us[max(k - 1, 0)], us[min(k + 1, len(us) - 1)]),
                                   method="bounded", options={"xatol": 1e-13})
    l_est = float(min(ratio(us[k]), res.fun))

    return TruncatedPhi(phi, Phi, dPhi, phi_prime_over_t, l_est, 2.0,
                        "truncated-mean-curvature", L, None, L=L, xL=xL, yL=yL)


def mean_curvature() -> NFunction:
    """Untruncated density sqrt(1+t^2) - 1 (operator only, not an N-function)."""

    def phi(t):
        t = np.asarray(t, dtype=float)
        return 1.0 / np.sqrt(1.0 + t * t)

    def Phi(t):
        u = np.asarray(t, dtype=float) ** 2
        return u / (np.sqrt(1.0 + u) + 1.0)

    def dPhi(t):
        t = np.asarray(t, dtype=float)
        return phi(t) * t

    def phi_prime_over_t(t):
        t = np.asarray(t, dtype=float)
        return -(1.0 + t * t) ** -1.5

    return NFunction(phi, Phi, dPhi, phi_prime_over_t, 1.0, 2.0, "mean-curvature")


def build_custom(phi: Callable, phi_prime: Optional[Callable] = None) -> NFunction:
    """N-function from an arbitrary positive slope density ``phi``.

    ``Phi`` is evaluated by adaptive quadrature, which is slow; intended for
    checking conditions on new generators, not for production solves.
    """

    def _phi(t):
        return np.asarray(phi(np.abs(np.asarray(t, dtype=float))), dtype=float)

    def Phi(t):
        t = np.abs(np.asarray(t, dtype=float))
        vals = [integrate.quad(lambda s: s * float(_phi(s)), 0.0, float(ti),
                               epsabs=1e-13, epsrel=1e-12, limit=200)[0] for ti in t.ravel()]
        return np.asarray(vals).reshape(t.shape)

    def dPhi(t):
        t = np.asarray(t, dtype=float)
        return _phi(t) * t

    if phi_prime is None:
        def phi_prime_over_t(t):
            t = np.abs(np.asarray(t, dtype=float))
            h = 1e-6 * np.maximum(t, 1e-6)
            return (_phi(t + h) - _phi(np.abs(t - h))) / (2.0 * h) / np.where(t > 0, t, 1.0)
    else:
        def phi_prime_over_t(t):
            t = np.abs(np.asarray(t, dtype=float))
            return np.asarray(phi_prime(t), dtype=float) / np.where(t > 0, t, 1.0)

    l_est, m_est = _exponents(_phi, phi_prime_over_t)
    return NFunction(_phi, Phi, dPhi, phi_prime_over_t, l_est, m_est, "custom")


def complementary_value(nf: NFunction, s, max_expand: int = 200):
    """Legendre conjugate max_{t >= 0} (s t - Phi(t)).

    Uses the registered closed form when present, otherwise the maximiser is
    the root of the increasing map ``t -> phi(t) t - s``.  Arrays of ``s`` are
    handled by a vectorised bisection.
    """
    if np.ndim(s) > 0:
        return _complementary_array(nf, np.asarray(s, dtype=float), max_expand)
    s = float(s)
    if s < 0:
        raise ValueError("complementary function is evaluated at s >= 0")
    if s == 0.0:
        return 0.0
    if nf.conjugate is not None:
        return float(nf.conjugate(s))
    g = lambda t: float(nf.dPhi(t)) - s
    hi = 1.0
    for _ in range(max_expand):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"no bracket for the conjugate maximiser at s={s}")
    t_star = optimize.brentq(g, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return s * t_star - float(nf.Phi(t_star))


def legendre_maximizer(nf: NFunction, s, max_expand: int = 200) -> np.ndarray:
    """t*(s) solving phi(t) t = s, vectorised bisection to full precision."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("complementary function is evaluated at s >= 0")
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    for _ in range(max_expand):
        short = nf.dPhi(hi) <= s
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise ConvergenceError("no bracket for the conjugate maximiser")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if np.all((mid <= lo) | (mid >= hi)):
            break
        up = nf.dPhi(mid) > s
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def _complementary_array(nf, s, max_expand):
    if nf.conjugate is not None:
        if np.any(s < 0):
            raise ValueError("complementary function is evaluated at s >= 0")
        return np.asarray(nf.conjugate(s), dtype=float)
    t = legendre_maximizer(nf, s, max_expand)
    return s * t - nf.Phi(t)


def luxemburg_norm(nf: NFunction, samples: Sequence[float], weights: Sequence[float],
                   rtol: float = 1e-10) -> float:
    """Smallest lambda with sum_i w_i Phi(|u_i|/lambda) <= 1, by bisection."""
    u = np.abs(np.asarray(samples, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if u.shape != w.shape:
        raise ValueError("samples and weights differ in length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    umax = float(u.max(initial=0.0))
    if umax == 0.0:
        return 0.0

    def modular(lam):
        return float(np.sum(w * nf.Phi(u / lam)))

    k = int(np.argmax(u))
    # the largest sample alone forces modular >= 1 at lo; all samples at umax give <= 1 at hi
    lo = umax / nf.inverse(1.0 / w[k])
    hi = umax / nf.inverse(1.0 / float(w.sum()))
    while modular(lo) <= 1.0 and lo > 0:
        lo *= 0.5
    while modular(hi) > 1.0:
        hi *= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if modular(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


# ----------------------------------------------------------------------------
# inequality predicates; each returns the worst relative slack (>= 0 holds)

def _rel(lhs, rhs):
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.finfo(float).tiny)
    return float(np.min((rhs - lhs) / scale))


def growth_slack(nf: NFunction, t) -> float:
    """l <= phi(t) t^2 / Phi(t) <= m."""
    t = np.asarray(t, dtype=float)
    r = nf.phi(t) * t * t / nf.Phi(t)
    return min(_rel(nf.l, r), _rel(r, nf.m))


def sandwich_slack(nf: NFunction, s, t) -> float:
    """xi0(t) Phi(s) <= Phi(s t) <= xi1(t) Phi(s), xi0/xi1 = min/max of t^l, t^m."""
    s, t = np.meshgrid(np.asarray(s, dtype=float), np.asarray(t, dtype=float), indexing="ij")
    tl, tm = t ** nf.l, t ** nf.m
    mid = nf.Phi(s * t)
    Ps = nf.Phi(s)
    return min(_rel(np.minimum(tl, tm) * Ps, mid), _rel(mid, np.maximum(tl, tm) * Ps))


def quasi_triangle_slack(nf: NFunction, a, b) -> float:
    """Phi(|a + b|) <= 2^m (Phi(|a|) + Phi(|b|))."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return _rel(nf.Phi(np.abs(a + b)), 2.0 ** nf.m * (nf.Phi(np.abs(a)) + nf.Phi(np.abs(b))))


def supporting_slack(nf: NFunction, z, w) -> float:
    """phi(|z|) z.(w - z) <= Phi(|w|) - Phi(|z|) for vectors z != 0 (rows of z, w)."""
    z, w = np.atleast_2d(np.asarray(z, dtype=float)), np.atleast_2d(np.asarray(w, dtype=float))
    nz, nw = np.linalg.norm(z, axis=1), np.linalg.norm(w, axis=1)
    lhs = nf.phi(nz) * np.einsum("ij,ij->i", z, w - z) + nf.Phi(nz)
    return _rel(lhs, nf.Phi(nw))


def young_slack(nf: NFunction, s, t) -> float:
    """s t <= Phi(t) + Phi~(s)."""
    s, t = np.asarray(s, dtype=float).ravel(), np.asarray(t, dtype=float).ravel()
    conj = complementary_value(nf, s)
    S, Tt = np.meshgrid(s, t, indexing="ij")
    return _rel(S * Tt, nf.Phi(Tt) + conj[:, None])
