"""Minimisation of the discrete strip energy over the admissible box.

The contract is projected descent with Armijo backtracking along the
projected arc.  Directions come from a projected Newton step on the free
variables (exact Hessian, then a convexified one with V'' clipped at zero)
and fall back to the scaled projected gradient when neither gives descent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .coefficients import CoefficientField
from .orlicz import NFunction
from .potentials import Potential
from .strip import EnergyBreakdown, Field, Grid, StripProblem, initial_ramp

log = logging.getLogger(__name__)


class LineSearchFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 500
    tol_grad: float = 1e-8
    tol_energy: float = 1e-15
    shrink: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-12
    symmetrize_every: int = 0
    odd_constraint: bool = False
    projection: bool = True
    method: str = "newton"
    ordered: bool = False

    def __post_init__(self):
        if not (self.tol_grad > 0 and self.tol_energy > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not 0 < self.armijo < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")
        if self.method not in ("newton", "gradient"):
            raise ValueError("method is 'newton' or 'gradient'")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")


@dataclass
class SolveReport:
    field: Field
    energy: EnergyBreakdown
    iterations: int
    grad_trail: list
    energy_trail: list
    termination: str
    anchor_cell: Optional[int] = None

    @property
    def converged(self) -> bool:
        return self.termination in ("tol_grad", "tol_energy")

    @property
    def grad_norm(self) -> float:
        return self.grad_trail[-1]


def y_symmetrize(field: Field, nf: NFunction, A: CoefficientField, V: Potential) -> Field:
    """Mirror the cheaper y-half of the field across y = 1/2.

    Ties keep the lower half.
    """
    g = field.grid
    if g.ny % 2:
        raise ValueError("y-symmetrisation needs an even ny")
    I1, I2 = StripProblem(g, nf, A, V).breakdown(field.values).half_energies()
    return Field(g, _mirror(field.values, lower=I1 <= I2))


def _mirror(u, lower: bool):
    h = u.shape[1] // 2
    out = u.copy()
    if lower:
        out[:, h:] = u[:, :h][:, ::-1]
    else:
        out[:, :h] = u[:, h:][:, ::-1]
    return out


def odd_project(field: Field, beta: Optional[float] = None) -> Field:
    """Odd part in x, clamped to [0, beta] on x > 0 and reflected."""
    g = field.grid
    if g.left != -g.right:
        raise ValueError("odd projection needs clamps -beta, beta")
    beta = g.right if beta is None else beta
    return Field(g, _odd(field.values, beta))


def _odd(u, beta):
    n = u.shape[0] // 2
    right = 0.5 * (u[n:] - u[:n][::-1])
    right = np.clip(right, 0.0, beta)
    out = np.empty_like(u)
    out[n:] = right
    out[:n] = -right[::-1]
    return out


class _Bounds:
    def __init__(self, grid: Grid, V: Potential, cfg: SolverConfig):
        nx, ny = grid.nx, grid.ny
        self.odd = cfg.odd_constraint
        self.beta = V.beta
        if cfg.odd_constraint:
            if V.alpha != -V.beta or grid.left != -grid.right:
                raise ValueError("odd mode needs alpha = -beta and symmetric clamps")
            self.lo = np.full((nx, ny), -V.beta)
            self.hi = np.full((nx, ny), V.beta)
            self.lo[nx // 2:] = 0.0
            self.hi[: nx // 2] = 0.0
        elif cfg.projection:
            self.lo = np.full((nx, ny), V.alpha)
            self.hi = np.full((nx, ny), V.beta)
        else:
            self.lo = np.full((nx, ny), -np.inf)
            self.hi = np.full((nx, ny), np.inf)

    def project(self, u):
        u = np.minimum(np.maximum(u, self.lo), self.hi)
        if self.odd:
            u = _odd(u, self.beta)
        return u

    def projected_gradient(self, u, g):
        pg = g.copy()
        pg[(u <= self.lo) & (g > 0)] = 0.0
        pg[(u >= self.hi) & (g < 0)] = 0.0
        if self.odd:
            pg = 0.5 * (pg - _flip_x(pg))
        return pg

    def active(self, u, g, eps):
        return ((u <= self.lo + eps) & (g > 0)) | ((u >= self.hi - eps) & (g < 0))


def _flip_x(a):
    return a[::-1]


def _newton_direction(problem: StripProblem, u, g, active):
    free = ~active.ravel()
    gv = g.ravel()
    gnorm = np.linalg.norm(gv)
    for clip in (False, True):
        H = problem.hessian(u, clip_potential=clip)
        Hff = H[free][:, free]
        try:
            with np.errstate(all="ignore"):
                df = spla.spsolve(Hff.tocsc(), -gv[free])
        except Exception:  # singular factorisation
            continue
        if not np.all(np.isfinite(df)):
            continue
        d = np.zeros_like(gv)
        d[free] = df
        diag = H.diagonal()
        d[~free] = -gv[~free] / np.where(diag[~free] > 0, diag[~free], 1.0)
        if gv @ d < -1e-14 * gnorm * np.linalg.norm(d):
            return d.reshape(u.shape), "newton" if not clip else "newton-convexified"
    return None, "none"


def minimize(start: Field, nf: NFunction, A: CoefficientField, V: Potential,
             cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Monotone projected descent from ``start``.

    Every accepted iterate satisfies the Armijo condition measured at the
    projected point, so the energy trail is non-increasing.  Symmetrisation
    in y is applied every ``symmetrize_every`` iterations and kept only if it
    does not raise the energy.
    """
    grid = start.grid
    problem = StripProblem(grid, nf, A, V, ordered=cfg.ordered)
    bounds = _Bounds(grid, V, cfg)
    u = start.values.copy()
    if cfg.odd_constraint or cfg.projection:
        if np.any(u < bounds.lo) or np.any(u > bounds.hi):
            raise ValueError("start field is not box-feasible")
        u = bounds.project(u)

    E, g = problem.energy_and_gradient(u)
    if not math.isfinite(E):
        raise FloatingPointError("start field has non-finite energy")
    pg = bounds.projected_gradient(u, g)
    grad_trail = [float(np.abs(pg).max())]
    energy_trail = [E]
    reason = "max_iter"
    it = 0
    scale = max(V.beta - V.alpha, 1e-300)
    step_gd = 1.0 / max(problem.hessian(u, clip_potential=True).diagonal().max(), 1e-300)

    while True:
        if grad_trail[-1] < cfg.tol_grad:
            reason = "tol_grad"
            break
        if it >= cfg.max_iter:
            reason = "max_iter"
            break
        it += 1
        eps_b = min(1e-10 * scale, float(np.abs(u - bounds.project(u - g * step_gd)).max()))
        active = bounds.active(u, g, eps_b)
        directions = []
        if cfg.method == "newton":
            d, kind = _newton_direction(problem, u, g, active)
            if d is not None:
                directions.append((d, kind))
        directions.append((-g * step_gd, "gradient"))

        accepted = False
        for d, kind in directions:
            s = 1.0
            while s >= cfg.min_step:
                trial = bounds.project(u + s * d)
                Et = problem.energy(trial)
                if Et <= E + cfg.armijo * float(np.sum(g * (trial - u))) and Et <= E:
                    accepted = True
                    break
                s *= cfg.shrink
            if accepted:
                if kind == "gradient":
                    # grow the gradient step after an immediate success
                    step_gd = step_gd * (2.0 if s == 1.0 else s)
                break
        if not accepted:
            reason = "line_search_failure"
            log.warning("line search failed at iteration %d (energy %.17g)", it, E)
            break

        E_prev = E
        u = trial
        if cfg.symmetrize_every and it % cfg.symmetrize_every == 0:
            I1, I2 = problem.breakdown(u).half_energies()
            v = _mirror(u, lower=I1 <= I2)
            if cfg.odd_constraint:
                v = bounds.project(v)
            Ev = problem.energy(v)
            if Ev <= Et:
                u, Et = v, Ev
        E, g = problem.energy_and_gradient(u)
        pg = bounds.projected_gradient(u, g)
        grad_trail.append(float(np.abs(pg).max()))
        energy_trail.append(E)
        if E > E_prev:  # pragma: no cover - guarded by the acceptance test above
            raise AssertionError("energy increased")
        if grad_trail[-1] < cfg.tol_grad:
            reason = "tol_grad"
            break
        if (E_prev - E) <= cfg.tol_energy * max(abs(E), 1e-300):
            reason = "tol_energy"
            break

    field = Field(grid, u)
    report = SolveReport(field, problem.breakdown(u), it, grad_trail, energy_trail, reason,
                         anchor_cell(field, nf, V))
    return report


def anchor_cell(field: Field, nf: NFunction, V: Potential) -> Optional[int]:
    """First unit cell j where the mass of Phi(|u - alpha|) exceeds Phi((beta-alpha)/2)/2."""
    g = field.grid
    delta = 0.5 * float(nf.Phi((V.beta - V.alpha) / 2.0))
    dens = nf.Phi(np.abs(field.values - V.alpha)).sum(axis=1) * g.cell_measure
    js = np.floor(g.x).astype(int)
    mass = {}
    for j, m in zip(js, dens):
        mass[int(j)] = mass.get(int(j), 0.0) + float(m)
    for j in sorted(mass):
        if mass[j] > delta:
            return j
    return None


# ----------------------------------------------------------------------------
# continuation

@dataclass(frozen=True)
class Stage:
    """One continuation stage; unset entries inherit from the previous stage."""
    L: Optional[float] = None
    T: Optional[float] = None
    beta: Optional[float] = None


@dataclass
class ContinuationProblem:
    T: float
    nx: int
    ny: int
    nf: NFunction
    A: CoefficientField
    V: Potential
    potential_family: str = "ginzburg-landau"


class StageFailure(RuntimeError):
    def __init__(self, index, report):
        super().__init__(f"continuation stage {index} failed: {report.termination}")
        self.index = index
        self.report = report


def continuation_solve(schedule: Sequence[Stage], base: ContinuationProblem,
                       cfg: SolverConfig = SolverConfig(), cold: bool = False) -> list:
    """Solve a chain of stages, warm-starting each from the previous field.

    Changing T keeps hx fixed (nx scales with T) and resamples; changing beta
    (symmetric wells, alpha = -beta) rescales the previous field.
    """
    from .orlicz import build_truncated
    from .potentials import build_potential

    if not schedule:
        raise ValueError("empty continuation schedule")
    reports = []
    prev: Optional[Field] = None
    T, nx, ny, nf, V = base.T, base.nx, base.ny, base.nf, base.V
    hx = 2.0 * T / nx
    for i, st in enumerate(schedule):
        if st.L is not None:
            nf = build_truncated(st.L)
        if st.T is not None:
            T = float(st.T)
            nx = int(round(2.0 * T / hx))
            nx += nx % 2
        if st.beta is not None:
            V = build_potential(base.potential_family, -float(st.beta), float(st.beta),
                                base.V.coupled_nf)
        grid = Grid.for_potential(T, nx, ny, V)
        if prev is None or cold:
            start = initial_ramp(grid, V.alpha, V.beta)
        else:
            src = prev
            if (src.grid.left, src.grid.right) != (grid.left, grid.right):
                a0, b0 = src.grid.left, src.grid.right
                vals = V.alpha + (src.values - a0) * (V.beta - V.alpha) / (b0 - a0)
                src = Field(src.grid.with_clamps(grid.left, grid.right), vals)
            start = src if src.grid == grid else src.resample(grid)
            start = Field(grid, np.clip(start.values, V.alpha, V.beta))
        rep = minimize(start, nf, base.A, V, cfg)
        if rep.termination == "line_search_failure":
            raise StageFailure(i, rep)
        reports.append(rep)
        prev = rep.field
    return reports
