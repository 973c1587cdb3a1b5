"""Four-corner finite-difference stencil on the clamped periodic strip.

Nodes sit at cell centres ``x_i = -T + (i + 1/2) hx``, ``y_j = (j + 1/2) hy``.
Ghost columns at ``x = -T`` and ``x = T`` hold the clamp values, so the two
edge dual cells have width ``hx/2``.  Every dual cell (between two node
columns and two rows) carries four corner gradients, one per choice of
x-row and y-column; its density is the average of ``Phi`` over the corners.
The average is invariant under ``y -> 1 - y`` and ``x -> -x``.

The compiled kernel is used when importable and the family is built in;
``HETEROCLINIC_PURE_PYTHON=1`` or ``set_backend("python")`` forces numpy.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

try:
    from . import _kernels
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

_backend = "python" if (_kernels is None or os.environ.get("HETEROCLINIC_PURE_PYTHON")) else "compiled"


def get_backend() -> str:
    return _backend


def compiled_available() -> bool:
    return _kernels is not None


def set_backend(name: str) -> None:
    global _backend
    if name not in ("python", "compiled"):
        raise ValueError("backend is 'python' or 'compiled'")
    if name == "compiled" and _kernels is None:
        raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
    _backend = name


def edge_spacings(nx: int, hx: float) -> np.ndarray:
    d = np.full(nx + 1, hx)
    d[0] = d[-1] = 0.5 * hx
    return d


def corner_differences(u, left, right, hx, hy):
    """DX (nx+1, ny) and the four corner partners DY[(a, b)] of the same shape.

    Corner (a, b) pairs DX[k, r] with the y-difference of extended column
    ``k + a`` across the edge ``(r - b, r - b + 1)``.
    """
    nx, ny = u.shape
    ue = np.empty((nx + 2, ny))
    ue[0] = left
    ue[1:-1] = u
    ue[-1] = right
    dxk = edge_spacings(nx, hx)
    DX = np.diff(ue, axis=0) / dxk[:, None]
    DYe = np.zeros((nx + 2, ny))
    DYe[1:-1] = (np.roll(u, -1, axis=1) - u) / hy
    DY = {(a, b): np.roll(DYe[a:a + nx + 1], b, axis=1) for a in (0, 1) for b in (0, 1)}
    return DX, DY, dxk


def _safe_phi(nf, t):
    ph = nf.phi(t)
    return np.where(np.isfinite(ph), ph, 0.0)


def gradient_term_numpy(u, left, right, hx, hy, nf, want_grad=True):
    nx, ny = u.shape
    DX, DY, dxk = corner_differences(u, left, right, hx, hy)
    wq = (0.25 * dxk * hy)[:, None]
    acc = np.zeros_like(DX)
    if not want_grad:
        for key in DY:
            acc += nf.Phi(np.hypot(DX, DY[key]))
        return wq * acc, None
    Sx = np.zeros_like(DX)
    FY = np.zeros((nx + 2, ny))
    for (a, b), dy in DY.items():
        t = np.hypot(DX, dy)
        acc += nf.Phi(t)
        ph = _safe_phi(nf, t)
        Sx += ph * DX
        FY[a:a + nx + 1] += np.roll(wq * ph * dy / hy, -b, axis=1)
    ge = np.zeros((nx + 2, ny))
    fx = wq * Sx / dxk[:, None]
    ge[1:] += fx
    ge[:-1] -= fx
    ge += np.roll(FY, 1, axis=1) - FY
    return wq * acc, ge[1:-1]


def gradient_term(u, left, right, hx, hy, nf, want_grad=True):
    """Weighted dual-cell densities (nx+1, ny) and the gradient of their sum."""
    u = np.ascontiguousarray(u, dtype=float)
    if _backend == "compiled" and nf.code >= 0:
        grad = np.zeros_like(u) if want_grad else None
        xL = getattr(nf, "xL", 0.0)
        yL = getattr(nf, "yL", 0.0)
        par = nf.param if nf.code in (0, 1) else 0.0
        dens = _kernels.gradient_term(u, float(left), float(right), float(hx), float(hy),
                                      nf.code, float(par), float(xL), float(yL), grad)
        return dens, grad
    return gradient_term_numpy(u, left, right, hx, hy, nf, want_grad)


def max_corner_gradient(u, left, right, hx, hy) -> float:
    DX, DY, _ = corner_differences(u, left, right, hx, hy)
    return float(max(np.hypot(DX, dy).max() for dy in DY.values()))


def gradient_hessian(u, left, right, hx, hy, nf, t_min=1e-12):
    """Sparse Hessian of the gradient part with respect to the flattened nodes."""
    nx, ny = u.shape
    DX, DY, dxk = corner_differences(u, left, right, hx, hy)
    wq = np.broadcast_to((0.25 * dxk * hy)[:, None], DX.shape)
    K, R = np.meshgrid(np.arange(nx + 1), np.arange(ny), indexing="ij")
    inv_dx = np.broadcast_to((1.0 / dxk)[:, None], DX.shape)

    def node(col_ext, row):
        idx = (col_ext - 1) * ny + (row % ny)
        return np.where((col_ext >= 1) & (col_ext <= nx), idx, -1)

    rows, cols, vals = [], [], []
    for (a, b), dy in DY.items():
        t = np.maximum(np.hypot(DX, dy), t_min)
        ph = nf.phi(t)
        ppt = nf.phi_prime_over_t(t)
        ppt = np.where(np.isfinite(ppt), ppt, 0.0)
        hxx = wq * (ph + ppt * DX * DX)
        hyy = wq * (ph + ppt * dy * dy)
        hxy = wq * ppt * DX * dy
        e0 = R - b
        n = [node(K, R), node(K + 1, R), node(K + a, e0), node(K + a, e0 + 1)]
        cy = 1.0 / hy
        c = [-inv_dx, inv_dx, np.full(DX.shape, -cy), np.full(DX.shape, cy)]
        for i in range(4):
            for j in range(4):
                xi, xj = i < 2, j < 2
                if xi and xj:
                    h = hxx
                elif not xi and not xj:
                    h = hyy
                else:
                    h = hxy
                v = (c[i] * c[j] * h).ravel()
                ri, cj = n[i].ravel(), n[j].ravel()
                m = (ri >= 0) & (cj >= 0)
                rows.append(ri[m])
                cols.append(cj[m])
                vals.append(v[m])
    N = nx * ny
    H = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    return H.tocsr()
