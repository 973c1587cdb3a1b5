"""Property checks on computed solutions and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_bvp

from .coefficients import CoefficientField, build_coefficient
from .orlicz import NFunction, build_truncated
from .potentials import Potential, build_potential
from .solver import SolveReport, SolverConfig, minimize
from .strip import Field, Grid, initial_ramp, max_gradient, weak_residual

STRICT_MARGIN = 1e-12


@dataclass
class VerifyReport:
    gradient_bound: dict
    heteroclinic: dict
    strict_bounds: dict
    y_symmetry_residual: float
    odd_residual: float
    residuals: dict
    odd_mode: Optional[dict] = None

    @property
    def passed(self) -> bool:
        flags = [self.gradient_bound["pass"], self.heteroclinic["pass"],
                 self.strict_bounds["pass"], self.residuals["pass"]]
        if self.odd_mode is not None:
            flags.append(self.odd_mode["pass"])
        return all(flags)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_float)


def _json_float(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def check_solution(report, nf: NFunction, A: CoefficientField, V: Potential,
                   tol: float = 1e-3, tprime_fraction: float = 0.9,
                   odd: bool = False) -> VerifyReport:
    """Evaluate the checkable conclusions on a solved field.

    ``report`` may be a SolveReport or a bare Field.
    """
    f: Field = report.field if isinstance(report, SolveReport) else report
    g = f.grid
    u = f.values
    L = getattr(nf, "L", math.inf)
    sqrtL = math.sqrt(L)
    gmax = max_gradient(f)
    gb = {"max_grad": gmax, "sqrt_L": sqrtL, "margin": sqrtL - gmax, "pass": gmax < sqrtL}

    Tp = tprime_fraction * g.T
    left = float(np.abs(f.profile(-Tp) - V.alpha).max())
    right = float(np.abs(f.profile(Tp) - V.beta).max())
    het = {"T_prime": Tp, "left_error": left, "right_error": right, "tol": tol,
           "pass": left < tol and right < tol}

    above = float((u - V.alpha).min())
    below = float((V.beta - u).min())
    sb = {"min_above_alpha": above, "min_below_beta": below, "margin": STRICT_MARGIN,
          "pass": above > STRICT_MARGIN and below > STRICT_MARGIN}

    ysym = float(np.abs(u - u[:, ::-1]).max())
    oddr = float(np.abs(u + u[::-1]).max())

    rt, res_t = weak_residual(f, nf, A, V)
    rc, res_c = weak_residual(f, "true-curvature", A, V)
    agree = float(np.abs(res_t - res_c).max())
    applicable = gb["pass"] and nf.family == "truncated-mean-curvature"
    res = {"truncated": rt, "true_curvature": rc, "agreement": agree,
           "applicable": applicable, "pass": (agree < 1e-12) if applicable else True}

    odd_info = None
    if odd:
        n = g.nx // 2
        rightvals = u[n:]
        interior = rightvals[:-1] if rightvals.shape[0] > 1 else rightvals
        # x = 0 lies midway between the two central columns
        u0 = 0.5 * (u[n - 1] + u[n])
        odd_info = {
            "odd_residual": oddr,
            "u_at_zero": float(np.abs(u0).max()),
            "min_right": float(rightvals.min()),
            "max_right": float(rightvals.max()),
            "interior_min_right": float(interior.min()),
            "strict_positive_interior": bool(interior.min() > 0.0),
            "pass": bool(oddr == 0.0 and np.all(u0 == 0.0) and rightvals.min() >= 0.0
                         and rightvals.max() <= V.beta),
        }
    return VerifyReport(gb, het, sb, ysym, oddr, res, odd_info)


# ----------------------------------------------------------------------------
# 1-D oracle

@dataclass
class OracleResult:
    mismatch: float
    converged: bool
    tol: float
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.converged and self.mismatch < self.tol


def oracle_1d_compare(report, nf: NFunction, A: CoefficientField, V: Potential,
                      tol: float = 1e-4, bvp_tol: float = 1e-9) -> OracleResult:
    """Compare a y-independent solve with a collocation solution of the ODE.

    The reduced problem -(phi(|q'|) q')' + A(x) V'(q) = 0 on (-T, T) with the
    grid's clamp values is solved by scipy's damped-Newton collocation
    (``solve_bvp``), with q'' = A V'(q) / (phi(q') q')'.
    """
    f: Field = report.field if isinstance(report, SolveReport) else report
    g = f.grid
    ys = np.linspace(0.0, 1.0, 17)
    probe = A.eval(np.repeat(g.x[:, None], len(ys), 1), np.repeat(ys[None, :], g.nx, 0))
    if np.ptp(probe, axis=1).max() > 1e-14 * max(1.0, np.abs(probe).max()):
        raise ValueError("oracle needs a y-independent coefficient")
    a_of_x = lambda x: A.eval(x, np.full_like(x, 0.5))

    def slope_derivative(p):
        t = np.abs(p)
        return nf.phi(t) + nf.phi_prime_over_t(t) * t * t

    def rhs(x, Y):
        return np.vstack([Y[1], a_of_x(x) * V.dV(Y[0]) / slope_derivative(Y[1])])

    def bc(ya, yb):
        return np.array([ya[0] - g.left, yb[0] - g.right])

    xs = np.concatenate([[-g.T], g.x, [g.T]])
    q0 = np.concatenate([[g.left], f.values.mean(axis=1), [g.right]])
    # start from a smooth profile between the clamps, not from the solve under test
    q0 = g.left + (g.right - g.left) * 0.5 * (1.0 + np.tanh(xs / max(g.T / 4.0, 1.0)))
    Y0 = np.vstack([q0, np.gradient(q0, xs)])
    sol = solve_bvp(rhs, bc, xs, Y0, tol=bvp_tol, max_nodes=200_000)
    if sol.status != 0:
        return OracleResult(math.inf, False, tol, f"collocation did not converge: {sol.message}")
    q = sol.sol(g.x)[0]
    mismatch = float(np.abs(f.values - q[:, None]).max())
    return OracleResult(mismatch, True, tol, sol.message)


# ----------------------------------------------------------------------------
# sweeps

@dataclass
class SweepTable:
    parameter: str
    rows: list
    summary: dict = field(default_factory=dict)

    def column(self, name):
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        keys = list(self.rows[0].keys())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in self.rows:
            w.writerow([_fmt(r[k]) for k in keys])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "rows": self.rows, "summary": self.summary}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


@dataclass
class SweepTemplate:
    T: float = 20.0
    nx: int = 400
    ny: int = 16
    A: Optional[CoefficientField] = None
    cfg: SolverConfig = SolverConfig()
    potential_family: str = "ginzburg-landau"
    endpoint_tol: float = 1e-3
    tprime_fraction: float = 0.9

    def coefficient(self) -> CoefficientField:
        return self.A if self.A is not None else build_coefficient(1, "constant")


def _gradient_passes(b, nf, A, template) -> bool:
    V = build_potential(template.potential_family, -b, b)
    grid = Grid.for_potential(template.T, template.nx, template.ny, V)
    rep = minimize(initial_ramp(grid, V.alpha, V.beta), nf, A, V, template.cfg)
    return max_gradient(rep.field) < math.sqrt(nf.L)


def beta_sweep(betas: Sequence[float], L: float, template: SweepTemplate = SweepTemplate(),
               refine: int = 0) -> SweepTable:
    """Solve GL(-beta, beta) for each beta and record the gradient bound.

    ``summary["delta_hat"]`` is the largest sampled beta such that it and every
    smaller sampled beta pass the strict sqrt(L) bound; None when even the
    smallest fails.  With ``refine > 0`` that many bisection steps between
    delta_hat and the next sampled (failing) beta give ``delta_hat_refined``.
    """
    betas = [float(b) for b in betas]
    if any(b <= 0 for b in betas) or not all(b1 < b0 for b0, b1 in zip(betas, betas[1:])):
        raise ValueError("betas must be positive and strictly decreasing")
    nf = build_truncated(L)
    A = template.coefficient()
    rows = []
    for b in betas:
        V = build_potential(template.potential_family, -b, b)
        grid = Grid.for_potential(template.T, template.nx, template.ny, V)
        row = {"beta": b}
        try:
            rep = minimize(initial_ramp(grid, V.alpha, V.beta), nf, A, V, template.cfg)
            vr = check_solution(rep, nf, A, V, template.endpoint_tol, template.tprime_fraction)
            row.update(energy=rep.energy.total, max_grad=vr.gradient_bound["max_grad"],
                       left_error=vr.heteroclinic["left_error"],
                       right_error=vr.heteroclinic["right_error"],
                       converged=rep.converged, gradient_pass=vr.gradient_bound["pass"],
                       heteroclinic_pass=vr.heteroclinic["pass"], error="")
        except Exception as exc:  # row kept with a failure flag
            row.update(energy=math.nan, max_grad=math.nan, left_error=math.nan,
                       right_error=math.nan, converged=False, gradient_pass=False,
                       heteroclinic_pass=False, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)

    delta_hat = None
    for row in reversed(rows):  # from the smallest beta upwards
        if row["gradient_pass"]:
            delta_hat = row["beta"]
        else:
            break
    grads = [r["max_grad"] for r in rows]
    monotone = all(g1 <= g0 + 1e-10 for g0, g1 in zip(grads, grads[1:]))
    summary = {"L": L, "delta_hat": delta_hat,
               "delta_hat_note": "" if delta_hat is not None else "below smallest sampled beta",
               "max_grad_nonincreasing": monotone,
               "smallest_passes": bool(rows[-1]["gradient_pass"])}
    if refine > 0 and delta_hat is not None and delta_hat != betas[0]:
        lo, hi = delta_hat, betas[betas.index(delta_hat) - 1]
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            try:
                ok = _gradient_passes(mid, nf, A, template)
            except Exception:
                ok = False
            lo, hi = (mid, hi) if ok else (lo, mid)
        summary["delta_hat_refined"] = lo
    return SweepTable("beta", rows, summary)


def epsilon_energy_comparison(eps_list: Sequence[float], A: CoefficientField, V: Potential,
                              nf: NFunction, template: SweepTemplate = SweepTemplate()) -> SweepTable:
    """Minimal energies of I_eps against I_inf (constant coefficient A_inf)."""
    if A.class_tag != 3:
        raise ValueError("epsilon comparison needs a Class 3 coefficient")
    eps_list = [float(e) for e in eps_list]
    if not all(e1 < e0 for e0, e1 in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must decrease toward 0")
    grid = Grid.for_potential(template.T, template.nx, template.ny, V)
    start = initial_ramp(grid, V.alpha, V.beta)
    A_inf = build_coefficient(1, "constant", {"value": A.Ainf})
    ref = minimize(start, nf, A_inf, V, template.cfg)
    E_inf = ref.energy.total
    rows = []
    for e in eps_list:
        row = {"eps": e}
        try:
            rep = minimize(start, nf, A.with_eps(e), V, template.cfg)
            row.update(energy_eps=rep.energy.total, energy_inf=E_inf,
                       converged=rep.converged, below_inf=rep.energy.total < E_inf, error="")
        except Exception as exc:
            row.update(energy_eps=math.nan, energy_inf=E_inf, converged=False,
                       below_inf=False, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    summary = {"energy_inf": E_inf, "inf_converged": ref.converged,
               "pass": bool(rows[-1]["below_inf"]) if rows else False}
    return SweepTable("eps", rows, summary)
