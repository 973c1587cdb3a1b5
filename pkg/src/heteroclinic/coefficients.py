"""Coefficient fields A(eps*x, y) for the four coefficient classes.

Built-in closed forms (``name`` in the config):

=====================  =====  ===============================================
name                   class  A(x, y)
=====================  =====  ===============================================
constant               1      ``value``
separable-periodic     1      ``base + amp sin^2(pi x) sin^2(pi y)``
trig                   1      ``base + amp sin(2 pi x) cos(2 pi y)``
gaussian-dip           2      ``A_p - depth exp(-(x/width)^2)(1 + c cos^2(pi y))``
rabinowitz-well        3      ``A_inf - (A_inf - A_center) exp(-(x/width)^2)``
vanishing-core         4      ``min(1, (x/K)^2) (1 + amp cos(2 pi y))``
custom                 any    a Python callable ``f(x, y)``
=====================  =====  ===============================================

Limits at infinity are taken in ``|x|``: every field is 1-periodic in y.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


class ClassViolation(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientField:
    base: Callable
    class_tag: int
    name: str
    eps: float = 1.0
    A0: float = 0.0
    Ainf: float = float("nan")
    K: float = float("nan")
    periodic_limit: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.eps == 1.0:
            return np.asarray(self.base(x, y), dtype=float) * np.ones(np.broadcast(x, y).shape)
        return np.asarray(self.base(self.eps * x, y), dtype=float) * np.ones(np.broadcast(x, y).shape)

    __call__ = eval

    def with_eps(self, eps: float) -> "CoefficientField":
        if not eps > 0:
            raise ValueError("eps must be positive")
        return replace(self, eps=float(eps))

    @property
    def is_y_independent(self) -> bool:
        return bool(self.params.get("y_independent", False))


def _require(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"missing coefficient parameters: {', '.join(missing)}")


def build_coefficient(class_tag: int, name: str = "constant", params: Optional[dict] = None,
                      eps: float = 1.0, func: Optional[Callable] = None,
                      periodic_limit: Optional[Callable] = None) -> CoefficientField:
    """Build and cheaply validate a coefficient field.

    Build-time validation covers the conditions that can be decided from the
    parameters (positivity, Class 3 well below ``A_inf``); ``class_check``
    gives the full sampled table.
    """
    params = dict(params or {})
    class_tag = int(class_tag)
    if class_tag not in (1, 2, 3, 4):
        raise ValueError(f"class tag must be 1..4, got {class_tag}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if class_tag != 3 and eps != 1.0:
        raise ValueError("eps scaling only applies to Class 3")
    kw = {}

    if name == "constant":
        c = float(params.setdefault("value", 1.0))
        if c <= 0:
            raise ClassViolation("constant coefficient must be positive")
        base = lambda x, y: np.full(np.broadcast(x, y).shape, c)
        kw = dict(A0=c, Ainf=c)
        params["y_independent"] = True
        if class_tag == 3:
            raise ClassViolation("Class 3 needs sup_y A(0,y) < A_inf; a constant field has equality")
    elif name == "separable-periodic":
        b0, amp = float(params.setdefault("base", 1.0)), float(params.setdefault("amp", 0.5))
        base = lambda x, y: b0 + amp * np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2
        kw = dict(A0=min(b0, b0 + amp))
    elif name == "trig":
        b0, amp = float(params.setdefault("base", 2.0)), float(params.setdefault("amp", 1.0))
        base = lambda x, y: b0 + amp * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        kw = dict(A0=b0 - abs(amp))
    elif name == "gaussian-dip":
        _require(params, "Ap")
        Ap = float(params["Ap"])
        depth = float(params.setdefault("depth", 0.5 * Ap))
        width = float(params.setdefault("width", 1.0))
        cy = float(params.setdefault("cy", 0.0))
        base = lambda x, y: Ap - depth * np.exp(-(x / width) ** 2) * (1.0 + cy * np.cos(np.pi * y) ** 2)
        periodic_limit = periodic_limit or (lambda x, y: np.full(np.broadcast(x, y).shape, Ap))
        kw = dict(A0=Ap - depth * (1.0 + max(cy, 0.0)))
        params["y_independent"] = cy == 0.0
        if depth <= 0:
            raise ClassViolation("Class 2 needs A < A_p strictly, i.e. depth > 0")
    elif name == "rabinowitz-well":
        _require(params, "Ainf", "Acenter")
        Ainf, Ac = float(params["Ainf"]), float(params["Acenter"])
        width = float(params.setdefault("width", 1.0))
        if not Ac < Ainf:
            raise ClassViolation(
                f"Class 3 needs sup_y A(0,y) < A_inf, got {Ac} >= {Ainf}")
        base = lambda x, y: Ainf - (Ainf - Ac) * np.exp(-(x / width) ** 2) + 0.0 * y
        kw = dict(A0=Ac, Ainf=Ainf)
        params["y_independent"] = True
    elif name == "vanishing-core":
        K = float(params.setdefault("K", 1.0))
        amp = float(params.setdefault("amp", 0.5))
        if not 0 <= amp < 1:
            raise ClassViolation("vanishing-core needs 0 <= amp < 1 for A >= 0")
        base = lambda x, y: np.minimum(1.0, (x / K) ** 2) * (1.0 + amp * np.cos(2 * np.pi * y))
        kw = dict(A0=0.0, K=K)
    elif name == "custom":
        if func is None:
            raise ValueError("custom coefficient requires func")
        base = func
        kw = {k: float(params[k]) for k in ("A0", "Ainf", "K") if k in params}
    else:
        raise ValueError(f"unknown coefficient name {name!r}")

    if class_tag == 3:
        if name == "custom":
            _require(params, "Ainf")
            ys = np.linspace(0.0, 1.0, 257)
            sup0 = float(np.max(base(np.zeros_like(ys), ys)))
            if not sup0 < float(params["Ainf"]):
                raise ClassViolation(f"Class 3 needs sup_y A(0,y) < A_inf, got {sup0}")
    if class_tag == 4 and name not in ("vanishing-core", "custom"):
        kw.setdefault("K", 1.0)

    return CoefficientField(base, class_tag, name, float(eps),
                            periodic_limit=periodic_limit, params=params, **kw)


@dataclass
class ClassReport:
    entries: dict

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries.values())

    def __getitem__(self, key):
        return self.entries[key]


def class_check(A: CoefficientField, x_range: tuple = (-3.0, 3.0), nx: int = 241,
                ny: int = 65, radii: tuple = (1.0, 2.0, 4.0, 8.0, 16.0),
                tol: float = 1e-10) -> ClassReport:
    """Residual table for (A1)-(A3) and the class-specific conditions.

    The grid must span at least three x-periods; ``radii`` are the ring
    boundaries used for the finite-window decay checks of Classes 2 and 3.
    """
    if x_range[1] - x_range[0] < 3.0:
        raise ValueError("sampling grid must cover at least 3 x-periods")
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(0.0, 1.0, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = A.eval(X, Y)
    e = {}

    e["A2_y_even"] = {"residual": float(np.abs(vals - A.eval(X, -Y)).max())}
    e["A2_y_even"]["pass"] = e["A2_y_even"]["residual"] < tol
    e["A3_y_periodic"] = {"residual": float(np.abs(A.eval(X, Y + 1.0) - vals).max())}
    e["A3_y_periodic"]["pass"] = e["A3_y_periodic"]["residual"] < tol
    vmin = float(vals.min())
    e["nonnegative"] = {"min": vmin, "pass": vmin >= 0.0}

    if A.class_tag in (1, 2, 3):
        e["A1_lower_bound"] = {"min": vmin, "A0": A.A0, "margin": vmin - A.A0,
                               "pass": A.A0 > 0 and vmin >= A.A0 - 1e-12}
    if A.class_tag == 1:
        r = float(np.abs(A.eval(X + 1.0, Y) - vals).max())
        e["x_periodic"] = {"residual": r, "pass": r < tol}
    if A.class_tag == 2:
        Ap = A.periodic_limit
        if Ap is None:
            e["below_periodic_limit"] = {"pass": False, "reason": "no periodic limit"}
        else:
            gap_local = Ap(X, Y) - vals
            rp = float(np.abs(Ap(X + 1.0, Y) - Ap(X, Y)).max())
            gaps = []
            for r0, r1 in zip(radii[:-1], radii[1:]):
                ring = np.linspace(r0, r1, 64)
                RX, RY = np.meshgrid(np.concatenate([-ring, ring]), ys, indexing="ij")
                gaps.append(float(np.abs(Ap(RX, RY) - A.base(RX, RY)).max()))
            # strictness on the sampled window; far rings only enter the decay check,
            # since the gap underflows to exactly 0 in floating point there
            min_gap = float(gap_local.min())
            e["below_periodic_limit"] = {"min_gap": min_gap, "pass": min_gap > 0.0}
            e["limit_x_periodic"] = {"residual": rp, "pass": rp < tol}
            e["gap_decay"] = {"ring_max_gaps": gaps,
                              "pass": all(g1 <= g0 for g0, g1 in zip(gaps[:-1], gaps[1:]))}
    if A.class_tag == 3:
        sup0 = float(A.base(np.zeros_like(ys), ys).max())
        R = radii[-1]
        far = np.linspace(R, 2 * R, 64)
        FX, FY = np.meshgrid(np.concatenate([-far, far]), ys, indexing="ij")
        far_min = float(A.base(FX, FY).min())
        e["well_below_infinity"] = {"sup_A0y": sup0, "Ainf": A.Ainf,
                                    "margin": A.Ainf - sup0, "pass": sup0 < A.Ainf}
        e["liminf_estimate"] = {"far_min": far_min, "Ainf": A.Ainf,
                                "pass": abs(far_min - A.Ainf) < 1e-6 * max(1.0, abs(A.Ainf))}
    if A.class_tag == 4:
        r = float(np.abs(A.eval(-X, Y) - vals).max())
        e["x_even"] = {"residual": r, "pass": r < tol}
        K = A.K
        ext = np.linspace(K, max(K, 1.0) * 16.0, 400)
        EX, EY = np.meshgrid(np.concatenate([-ext, ext]), ys, indexing="ij")
        inf_ext = float(A.eval(EX, EY).min())
        e["exterior_positive"] = {"K": K, "inf": inf_ext, "pass": inf_ext > 0.0}
        e["bounded"] = {"sup": float(vals.max()), "pass": bool(np.isfinite(vals).all())}
    return ClassReport(e)
