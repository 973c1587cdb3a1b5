"""Double-well potentials V with wells alpha < beta and their condition checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .orlicz import NFunction

FAMILIES = ("ginzburg-landau", "sine-gordon", "phi-coupled")


@dataclass(frozen=True)
class Potential:
    alpha: float
    beta: float
    V: Callable
    dV: Callable
    d2V: Callable
    family: str
    coupled_nf: Optional[NFunction] = field(default=None, repr=False)

    @property
    def wells(self) -> tuple[float, float]:
        return self.alpha, self.beta


def build_potential(family: str, alpha: float, beta: float,
                    coupled_nf: Optional[NFunction] = None) -> Potential:
    """Build a double-well family.

    ``ginzburg-landau``: ``(t-alpha)^2 (t-beta)^2``;
    ``sine-gordon``: ``beta + beta cos(pi t / beta)`` with ``alpha = -beta``;
    ``phi-coupled``: ``Phi(|(t-alpha)(t-beta)|)`` for a given N-function.
    """
    alpha, beta = float(alpha), float(beta)
    if not alpha < beta:
        raise ValueError(f"wells must satisfy alpha < beta, got {alpha}, {beta}")

    if family == "ginzburg-landau":
        def V(t):
            t = np.asarray(t, dtype=float)
            return (t - alpha) ** 2 * (t - beta) ** 2

        def dV(t):
            t = np.asarray(t, dtype=float)
            a, b = t - alpha, t - beta
            return 2.0 * a * b * (a + b)

        def d2V(t):
            t = np.asarray(t, dtype=float)
            a, b = t - alpha, t - beta
            return 2.0 * (a * a + 4.0 * a * b + b * b)

    elif family == "sine-gordon":
        if alpha != -beta:
            raise ValueError("sine-gordon potential requires alpha = -beta")
        k = math.pi / beta

        def V(t):
            return beta + beta * np.cos(k * np.asarray(t, dtype=float))

        def dV(t):
            return -math.pi * np.sin(k * np.asarray(t, dtype=float))

        def d2V(t):
            return -math.pi * k * np.cos(k * np.asarray(t, dtype=float))

    elif family == "phi-coupled":
        if coupled_nf is None:
            raise ValueError("phi-coupled potential requires an N-function")
        nf = coupled_nf

        def V(t):
            t = np.asarray(t, dtype=float)
            return nf.Phi(np.abs((t - alpha) * (t - beta)))

        def dV(t):
            t = np.asarray(t, dtype=float)
            g = (t - alpha) * (t - beta)
            # dPhi(g) = phi(|g|) g vanishes at the roots, which removes the sign(g) kink
            with np.errstate(invalid="ignore"):
                out = nf.dPhi(g) * (2.0 * t - alpha - beta)
            return np.where(g == 0.0, 0.0, out)

        def d2V(t):
            t = np.asarray(t, dtype=float)
            g = (t - alpha) * (t - beta)
            a = np.abs(g)
            with np.errstate(invalid="ignore", divide="ignore"):
                slope = nf.phi(a) + nf.phi_prime_over_t(a) * a * a  # (phi(s) s)' at |g|
                out = slope * (2.0 * t - alpha - beta) ** 2 + 2.0 * nf.dPhi(g)
            return np.where(np.isfinite(out), out, 0.0)
    else:
        raise ValueError(f"unknown potential family {family!r}; expected one of {FAMILIES}")

    return Potential(alpha, beta, V, dV, d2V, family, coupled_nf)


@dataclass
class ConditionReport:
    """Sampled witnesses for the structural conditions on V.

    Every entry maps a condition name to a dict with ``pass`` and the
    witnessing numbers.  Constants are sampled estimates, not proofs.
    """
    entries: dict

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries.values())

    def __getitem__(self, key):
        return self.entries[key]


def check_conditions(V: Potential, nf: NFunction, lam: float, n: int = 10_000,
                     fd_step: float = 1e-4) -> ConditionReport:
    """Check (V1)-(V8) numerically.

    (V4): sampled sup |V'| on (alpha, beta) for the window lam > max(|alpha|, |beta|).
    (V5): central second differences at the wells.
    (V6): sampled max |V(t) - V(-t)|.
    (V7): d-constants as the largest ratio |V'| / (phi(|t - w|) |t - w|) near each well w.
    (V8): largest mu with mu Phi(|t - beta|) <= V(t) on (beta - theta, beta + theta).
    """
    a, b = V.alpha, V.beta
    if not lam > max(abs(a), abs(b)):
        raise ValueError("lambda must exceed max(|alpha|, |beta|)")
    e = {}
    span = b - a

    ts = np.linspace(a - 1.0, b + 1.0, n)
    vals = V.V(ts)
    inner = np.linspace(a, b, n + 2)[1:-1]
    e["V2"] = {"pass": bool(V.V(a) == 0.0 and V.V(b) == 0.0) or
               bool(abs(V.V(a)) < 1e-14 and abs(V.V(b)) < 1e-14),
               "V_alpha": float(V.V(a)), "V_beta": float(V.V(b))}
    e["V3"] = {"pass": bool(vals.min() >= -1e-14 and V.V(inner).min() > 0.0),
               "min_V": float(vals.min()), "min_V_interior": float(V.V(inner).min())}
    h = 1e-4 * span
    fd = (V.V(ts + h) - V.V(ts - h)) / (2 * h)
    err = np.abs(fd - V.dV(ts)) / float(np.abs(V.dV(ts)).max())
    e["V1"] = {"pass": bool(err.max() < 1e-6), "max_rel_dV_mismatch": float(err.max())}

    M = float(np.abs(V.dV(inner)).max())
    e["V4"] = {"pass": bool(np.isfinite(M)), "M": M, "lambda": float(lam)}

    def second_diff(t):
        return float((V.V(t + fd_step) - 2 * V.V(t) + V.V(t - fd_step)) / fd_step ** 2)

    s_a, s_b = second_diff(a), second_diff(b)
    e["V5"] = {"pass": s_a > 0 and s_b > 0, "d2V_alpha": s_a, "d2V_beta": s_b}

    sym = np.linspace(-lam, lam, n)
    asym = float(np.abs(V.V(sym) - V.V(-sym)).max())
    e["V6"] = {"pass": asym <= 1e-12 * max(1.0, float(np.abs(V.V(sym)).max())),
               "max_asymmetry": asym}

    lam7 = span / 2.0
    d = {}
    for name, w in (("beta", b), ("alpha", a)):
        tt = w + np.linspace(-lam7, lam7, n)
        dist = np.abs(tt - w)
        denom = nf.phi(dist) * dist
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, np.abs(V.dV(tt)) / denom, 0.0)
        d[name] = float(np.nanmax(ratio))
    e["V7"] = {"pass": all(np.isfinite(v) for v in d.values()),
               "d1": d["beta"], "d2": 1.0, "d3": d["alpha"], "d4": 1.0, "lambda": lam7}

    theta = b / 2.0 if b > 0 else span / 4.0
    tt = b + np.linspace(-theta, theta, n + 2)[1:-1]
    dist = np.abs(tt - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, V.V(tt) / nf.Phi(dist), np.inf)
    mu = float(ratio.min())
    e["V8"] = {"pass": mu > 0.0, "mu": mu, "theta": theta}
    return ConditionReport(e)
