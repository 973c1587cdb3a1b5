"""Discrete energy on the truncated strip (-T, T) x (0, 1).

The field is stored at cell centres, periodic in y and clamped in x by ghost
columns placed on the window edges.  The energy is

    I(u) = sum_dual-cells  mean_corners Phi(|grad u|) * area
         + sum_cells       A(x, y) V(u) * hx * hy

and the clamped wells contribute exactly zero outside the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _stencil
from .coefficients import CoefficientField
from .orlicz import NFunction, mean_curvature
from .potentials import Potential


@dataclass(frozen=True)
class Grid:
    T: float
    nx: int
    ny: int
    left: float
    right: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("window half-width T must be positive")
        if self.nx < 2 or self.nx % 2:
            raise ValueError("nx must be even and >= 2")
        if self.ny < 4:
            raise ValueError("ny must be >= 4")

    @classmethod
    def for_potential(cls, T, nx, ny, V: Potential) -> "Grid":
        return cls(float(T), int(nx), int(ny), V.alpha, V.beta)

    @property
    def hx(self) -> float:
        return 2.0 * self.T / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def cell_measure(self) -> float:
        return self.hx * self.hy

    @property
    def x(self) -> np.ndarray:
        return -self.T + (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    @property
    def cells_per_unit(self) -> Optional[int]:
        c = self.nx / (2.0 * self.T)
        return int(round(c)) if abs(c - round(c)) < 1e-9 else None

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def dual_x(self) -> np.ndarray:
        """x-midpoints of the nx+1 dual columns."""
        xm = -self.T + np.arange(self.nx + 1) * self.hx
        xm[0] = -self.T + 0.25 * self.hx
        xm[-1] = self.T - 0.25 * self.hx
        return xm

    def with_clamps(self, left, right) -> "Grid":
        return Grid(self.T, self.nx, self.ny, float(left), float(right))


@dataclass
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(f"values shape {self.values.shape} does not match grid "
                             f"({self.grid.nx}, {self.grid.ny})")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def is_box_feasible(self, alpha, beta) -> bool:
        return bool(np.all(self.values >= alpha) and np.all(self.values <= beta))

    def profile(self, x0: float) -> np.ndarray:
        """u(x0, y) for every row, linear in x between nodes and clamps."""
        g = self.grid
        xs = np.concatenate([[-g.T], g.x, [g.T]])
        out = np.empty(g.ny)
        for j in range(g.ny):
            col = np.concatenate([[g.left], self.values[:, j], [g.right]])
            out[j] = np.interp(x0, xs, col)
        return out

    def resample(self, grid: Grid) -> "Field":
        """Linear interpolation in x onto a grid with the same ny."""
        if grid.ny != self.grid.ny:
            raise ValueError("resampling across different ny is not supported")
        g = self.grid
        xs = np.concatenate([[-g.T], g.x, [g.T]])
        out = np.empty((grid.nx, grid.ny))
        for j in range(g.ny):
            col = np.concatenate([[g.left], self.values[:, j], [g.right]])
            out[:, j] = np.interp(grid.x, xs, col, left=grid.left, right=grid.right)
        return Field(grid, out)


@dataclass
class EnergyBreakdown:
    total: float
    gradient_part: float
    potential_part: float
    per_cell: dict
    per_row: np.ndarray = field(repr=False)
    outside: float = 0.0

    def half_energies(self) -> tuple[float, float]:
        """Energies over y in (0, 1/2) and (1/2, 1)."""
        h = len(self.per_row) // 2
        return float(math.fsum(self.per_row[:h])), float(math.fsum(self.per_row[h:]))


def _sum(a, ordered: bool) -> float:
    return math.fsum(np.ravel(a)) if ordered else float(np.sum(a))


class StripProblem:
    """Energy, gradient and Hessian of one (grid, Phi, A, V) configuration.

    Coefficient samples are cached at construction.
    """

    def __init__(self, grid: Grid, nf: NFunction, A: CoefficientField, V: Potential,
                 ordered: bool = False):
        self.grid, self.nf, self.A, self.V = grid, nf, A, V
        self.ordered = ordered
        X, Y = grid.mesh()
        self.A_nodes = np.ascontiguousarray(A.eval(X, Y), dtype=float)
        self.w = grid.cell_measure

    def _grad_term(self, u, want_grad):
        g = self.grid
        return _stencil.gradient_term(u, g.left, g.right, g.hx, g.hy, self.nf, want_grad)

    def energy(self, u) -> float:
        dens, _ = self._grad_term(u, False)
        pot = self.A_nodes * self.V.V(u) * self.w
        return _sum(dens, self.ordered) + _sum(pot, self.ordered)

    def energy_and_gradient(self, u):
        dens, grad = self._grad_term(u, True)
        pot = self.A_nodes * self.V.V(u) * self.w
        grad += self.A_nodes * self.V.dV(u) * self.w
        return _sum(dens, self.ordered) + _sum(pot, self.ordered), grad

    def gradient(self, u):
        return self.energy_and_gradient(u)[1]

    def hessian(self, u, clip_potential: bool = False):
        import scipy.sparse as sp
        g = self.grid
        H = _stencil.gradient_hessian(u, g.left, g.right, g.hx, g.hy, self.nf)
        d2 = self.V.d2V(u)
        if clip_potential:
            d2 = np.maximum(d2, 0.0)
        return (H + sp.diags((self.A_nodes * d2 * self.w).ravel())).tocsr()

    def breakdown(self, u) -> EnergyBreakdown:
        g = self.grid
        dens, _ = self._grad_term(u, False)
        pot = self.A_nodes * self.V.V(u) * self.w
        if not (np.all(np.isfinite(dens)) and np.all(np.isfinite(pot))):
            raise FloatingPointError("non-finite energy: invalid field")
        gp, pp = _sum(dens, self.ordered), _sum(pot, self.ordered)
        # unit cells Omega_j; edge slivers fold into the nearest full cell
        jlo, jhi = math.floor(-g.T), math.ceil(g.T) - 1
        per = {}
        for xs, col in ((g.dual_x(), dens.sum(axis=1)), (g.x, pot.sum(axis=1))):
            js = np.clip(np.floor(xs).astype(int), jlo, jhi)
            for j, v in zip(js, col):
                per[int(j)] = per.get(int(j), 0.0) + float(v)
        per_row = dens.sum(axis=0) + pot.sum(axis=0)
        wells = (float(self.V.V(g.left)) == 0.0 and float(self.V.V(g.right)) == 0.0)
        return EnergyBreakdown(gp + pp, gp, pp, dict(sorted(per.items())), per_row,
                               0.0 if wells else math.inf)

    def residual(self, u, nf: Optional[NFunction] = None) -> np.ndarray:
        """Pointwise strong residual -div_h(phi(|grad u|) grad u) + A V'(u) at nodes."""
        g = self.grid
        nf = nf or self.nf
        _, grad = _stencil.gradient_term(u, g.left, g.right, g.hx, g.hy, nf, True)
        return grad / self.w + self.A_nodes * self.V.dV(u)


def initial_ramp(grid: Grid, alpha: float, beta: float) -> Field:
    """u(x, y) = clamp(x, alpha, beta), constant in y."""
    if not alpha < beta:
        raise ValueError("alpha < beta required")
    if not grid.T > max(abs(alpha), abs(beta)):
        raise ValueError(f"window T={grid.T} too small: the ramp needs T > max(|alpha|, |beta|)")
    col = np.clip(grid.x, alpha, beta)
    return Field(grid, np.repeat(col[:, None], grid.ny, axis=1))


def energy(field: Field, nf: NFunction, A: CoefficientField, V: Potential,
           ordered: bool = False) -> EnergyBreakdown:
    return StripProblem(field.grid, nf, A, V, ordered).breakdown(field.values)


def energy_gradient(field: Field, nf: NFunction, A: CoefficientField, V: Potential) -> np.ndarray:
    """Exact gradient of the discrete energy with respect to the nodal values."""
    if not np.all(np.isfinite(field.values)):
        raise FloatingPointError("non-finite field")
    return StripProblem(field.grid, nf, A, V).gradient(field.values)


def translate(field: Field, k: int) -> Field:
    """tau_k u(x, y) = u(x + k, y); exposed columns take the nearer clamp value."""
    g = field.grid
    cpu = g.cells_per_unit
    if cpu is None:
        raise ValueError("translation needs an integer number of cells per unit length")
    s = int(k) * cpu
    if abs(s) >= g.nx:
        raise ValueError(f"shift of {k} units exhausts the window")
    v = field.values
    out = np.empty_like(v)
    if s > 0:
        out[:-s] = v[s:]
        out[-s:] = g.right
    elif s < 0:
        out[-s:] = v[:s]
        out[:-s] = g.left
    else:
        out[:] = v
    return Field(g, out)


def weak_residual(field: Field, operator, A: CoefficientField, V: Potential):
    """Interior residual of the discrete quasilinear operator.

    ``operator`` is an N-function or the string ``"true-curvature"``, which
    selects phi(t) = 1/sqrt(1+t^2) without truncation.  Returns the max norm
    and the residual field (nx, ny).
    """
    nf = mean_curvature() if operator == "true-curvature" else operator
    res = StripProblem(field.grid, nf, A, V).residual(field.values, nf)
    return float(np.abs(res).max()), res


def max_gradient(field: Field) -> float:
    g = field.grid
    return _stencil.max_corner_gradient(field.values, g.left, g.right, g.hx, g.hy)


# ----------------------------------------------------------------------------
# field files

def write_field(path, field: Field) -> None:
    g = field.grid
    X, Y = g.mesh()
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# T={g.T!r}, nx={g.nx}, ny={g.ny}, alpha={g.left!r}, beta={g.right!r}\n")
        fh.write("x,y,u\n")
        for xv, yv, uv in zip(X.ravel(), Y.ravel(), field.values.ravel()):
            fh.write(f"{xv:.17g},{yv:.17g},{uv:.17g}\n")


def read_field(path) -> Field:
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for part in line[1:].split(","):
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key.strip()] = val.strip()
        elif line.strip() and line.strip() != "x,y,u":
            body.append(line)
    try:
        grid = Grid(float(meta["T"]), int(meta["nx"]), int(meta["ny"]),
                    float(meta["alpha"]), float(meta["beta"]))
    except KeyError as exc:
        raise ValueError(f"field file is missing header key {exc}") from None
    data = np.array([[float(v) for v in row.split(",")] for row in body])
    if data.shape != (grid.nx * grid.ny, 3):
        raise ValueError("field file body does not match its header")
    return Field(grid, data[:, 2].reshape(grid.nx, grid.ny))
