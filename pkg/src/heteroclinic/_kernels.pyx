# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled four-corner stencil for the gradient part of the strip energy.

Mirrors ``heteroclinic._stencil.gradient_term_numpy`` for the built-in
N-function families (codes: 0 power-p, 1 truncated mean curvature,
2 mean curvature).
"""
import numpy as np
from libc.math cimport sqrt, pow


cdef inline double _phi(double t2, int fam, double par, double xL, double yL) noexcept nogil:
    cdef double w
    if fam == 0:
        if par == 2.0:
            return 1.0
        if t2 == 0.0:
            return 0.0
        return pow(t2, 0.5 * (par - 2.0))
    elif fam == 1:
        if t2 <= par:
            return 1.0 / sqrt(1.0 + t2)
        elif t2 <= par + 1.0:
            w = t2 - par - 1.0
            return xL * w * w + yL
        return yL
    return 1.0 / sqrt(1.0 + t2)


cdef inline double _Phi(double t2, int fam, double par, double xL, double yL) noexcept nogil:
    cdef double w, P1
    if fam == 0:
        return pow(t2, 0.5 * par) / par
    elif fam == 1:
        if t2 <= par:
            return t2 / (sqrt(1.0 + t2) + 1.0)
        P1 = sqrt(1.0 + par) - 1.0
        w = t2 - par - 1.0
        if t2 <= par + 1.0:
            return P1 + 0.5 * (xL * (w * w * w + 1.0) / 3.0 + yL * (t2 - par))
        return P1 + 0.5 * (xL / 3.0 + yL) + 0.5 * yL * w
    return t2 / (sqrt(1.0 + t2) + 1.0)


cdef inline double _u(double[:, ::1] u, Py_ssize_t c, Py_ssize_t r, Py_ssize_t nx,
                      double left, double right) noexcept nogil:
    # c indexes the extended grid: 0 and nx+1 are the clamped ghost columns
    if c == 0:
        return left
    if c == nx + 1:
        return right
    return u[c - 1, r]


def gradient_term(double[:, ::1] u, double left, double right, double hx, double hy,
                  int fam, double par, double xL, double yL, grad=None):
    """Per dual-cell energy density (weighted) and, optionally, its gradient.

    Returns ``dens`` of shape (nx+1, ny).  When ``grad`` (nx, ny, C-contiguous)
    is given, the gradient of ``dens.sum()`` with respect to ``u`` is added
    into it.
    """
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t k, r, a, b, c, rr, e0, e1
    cdef double dxk, wq, gx, gy, t2, ph, fx, fy, acc
    cdef bint want = grad is not None
    cdef double[:, ::1] g
    dens_arr = np.zeros((nx + 1, ny))
    cdef double[:, ::1] dens = dens_arr
    if want:
        g = grad
    with nogil:
        for k in range(nx + 1):
            dxk = hx if (k > 0 and k < nx) else 0.5 * hx
            wq = 0.25 * dxk * hy
            for r in range(ny):
                gx = (_u(u, k + 1, r, nx, left, right) - _u(u, k, r, nx, left, right)) / dxk
                acc = 0.0
                fx = 0.0
                for a in range(2):
                    c = k + a
                    for b in range(2):
                        # y-edge between rows e0 and e1 = e0 + 1 (periodic)
                        e0 = (r - b + ny) % ny
                        e1 = (e0 + 1) % ny
                        if c == 0 or c == nx + 1:
                            gy = 0.0
                        else:
                            gy = (u[c - 1, e1] - u[c - 1, e0]) / hy
                        t2 = gx * gx + gy * gy
                        acc = acc + _Phi(t2, fam, par, xL, yL)
                        if want:
                            ph = _phi(t2, fam, par, xL, yL)
                            fx = fx + ph * gx
                            if c > 0 and c < nx + 1:
                                fy = wq * ph * gy / hy
                                g[c - 1, e1] += fy
                                g[c - 1, e0] -= fy
                dens[k, r] = wq * acc
                if want:
                    fx = wq * fx / dxk
                    if k < nx:
                        g[k, r] += fx
                    if k > 0:
                        g[k - 1, r] -= fx
    return dens_arr
