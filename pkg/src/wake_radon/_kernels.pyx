# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels (OpenMP over independent angles / pixels).

Parallel loops never share an accumulator: each thread owns whole output
columns or rows and sums in a fixed order, so results are identical for
any thread count.
"""

from cython.parallel cimport prange
from libc.math cimport floor, sqrt, cbrt, acos, cos, log, fabs, copysign

import numpy as np

NAME = "compiled"

cdef double PI = 3.14159265358979323846


cdef inline double _bilinear(const double[:, ::1] img, Py_ssize_t M,
                             double col, double row) noexcept nogil:
    cdef double fj = floor(col)
    cdef double fi = floor(row)
    cdef Py_ssize_t j0 = <Py_ssize_t>fj
    cdef Py_ssize_t i0 = <Py_ssize_t>fi
    cdef double fx = col - fj
    cdef double fy = row - fi
    cdef double acc = 0.0
    if i0 >= 0 and i0 < M:
        if j0 >= 0 and j0 < M:
            acc = acc + (1.0 - fy) * (1.0 - fx) * img[i0, j0]
        if j0 + 1 >= 0 and j0 + 1 < M:
            acc = acc + (1.0 - fy) * fx * img[i0, j0 + 1]
    if i0 + 1 >= 0 and i0 + 1 < M:
        if j0 >= 0 and j0 < M:
            acc = acc + fy * (1.0 - fx) * img[i0 + 1, j0]
        if j0 + 1 >= 0 and j0 + 1 < M:
            acc = acc + fy * fx * img[i0 + 1, j0 + 1]
    return acc


def forward_project(const double[:, ::1] img, const double[::1] cos_t,
                    const double[::1] sin_t, const double[::1] r_values,
                    int t_half, int nthreads=1):
    cdef Py_ssize_t M = img.shape[0]
    cdef Py_ssize_t n_r = r_values.shape[0]
    cdef Py_ssize_t n_th = cos_t.shape[0]
    cdef double c = (M - 1) / 2.0
    out_t = np.zeros((n_th, n_r), dtype=np.float64)
    cdef double[:, ::1] o = out_t
    cdef Py_ssize_t j, i, k
    cdef double ct, st, r, t, x, y, acc
    for j in prange(n_th, nogil=True, num_threads=nthreads, schedule="static"):
        ct = cos_t[j]
        st = sin_t[j]
        for i in range(n_r):
            r = r_values[i]
            acc = 0.0
            for k in range(-t_half, t_half + 1):
                t = <double>k
                x = r * ct - t * st
                y = r * st + t * ct
                acc = acc + _bilinear(img, M, x + c, c - y)
            o[j, i] = acc
    return np.ascontiguousarray(out_t.T)


def backproject(const double[:, ::1] q, const double[::1] cos_t,
                const double[::1] sin_t, double r0, double dr, int M,
                int nthreads=1):
    cdef Py_ssize_t n_r = q.shape[0]
    cdef Py_ssize_t n_th = q.shape[1]
    cdef double c = (M - 1) / 2.0
    out = np.zeros((M, M), dtype=np.float64)
    cdef double[:, ::1] o = out
    # angle-major copy so the inner loop reads contiguous columns
    qt_arr = np.ascontiguousarray(np.asarray(q).T)
    cdef const double[:, ::1] qt = qt_arr
    cdef Py_ssize_t i, jx, j, k0
    cdef double x, y, s, u, fk, f, acc
    for i in prange(M, nogil=True, num_threads=nthreads, schedule="static"):
        y = c - i
        for jx in range(M):
            x = jx - c
            acc = 0.0
            for j in range(n_th):
                s = x * cos_t[j] + y * sin_t[j]
                u = (s - r0) / dr
                fk = floor(u)
                k0 = <Py_ssize_t>fk
                f = u - fk
                if k0 >= 0 and k0 < n_r:
                    acc = acc + (1.0 - f) * qt[j, k0]
                if k0 + 1 >= 0 and k0 + 1 < n_r:
                    acc = acc + f * qt[j, k0 + 1]
            o[i, jx] = acc
    return out


def backproject_adjoint(const double[:, ::1] img, const double[::1] cos_t,
                        const double[::1] sin_t, double r0, double dr,
                        int n_r, int nthreads=1):
    cdef Py_ssize_t M = img.shape[0]
    cdef Py_ssize_t n_th = cos_t.shape[0]
    cdef double c = (M - 1) / 2.0
    out_t = np.zeros((n_th, n_r), dtype=np.float64)
    cdef double[:, ::1] o = out_t
    cdef Py_ssize_t i, jx, j, k0
    cdef double x, y, s, u, fk, f, v
    for j in prange(n_th, nogil=True, num_threads=nthreads, schedule="static"):
        for i in range(M):
            y = c - i
            for jx in range(M):
                x = jx - c
                s = x * cos_t[j] + y * sin_t[j]
                u = (s - r0) / dr
                fk = floor(u)
                k0 = <Py_ssize_t>fk
                f = u - fk
                v = img[i, jx]
                if k0 >= 0 and k0 < n_r:
                    o[j, k0] = o[j, k0] + (1.0 - f) * v
                if k0 + 1 >= 0 and k0 + 1 < n_r:
                    o[j, k0 + 1] = o[j, k0 + 1] + f * v
    return np.ascontiguousarray(out_t.T)


cdef inline double _cubic(double u, double ax, double b, double g2) noexcept nogil:
    return ((u - ax) * u + b) * u - ax * g2


cdef inline double _polish(double u, double ax, double b, double g2) noexcept nogil:
    cdef int it
    cdef double f, df, un, fn
    for it in range(2):
        f = _cubic(u, ax, b, g2)
        df = (3.0 * u - 2.0 * ax) * u + b
        if df == 0.0:
            break
        un = u - f / df
        fn = _cubic(un, ax, b, g2)
        if fabs(fn) < fabs(f):
            u = un
    return u


cdef inline double _objective(double u, double ax, double g2, double omega) noexcept nogil:
    return log(g2 + u * u) + (u - ax) * (u - ax) / (2.0 * omega)


cdef double _prox_one(double xv, double gamma, double omega) noexcept nogil:
    cdef double ax = fabs(xv)
    if ax < 1e-30:
        return copysign(0.0, xv)
    cdef double g2 = gamma * gamma
    cdef double b = g2 + 2.0 * omega
    cdef double p = b - ax * ax / 3.0
    cdef double q = ax * g2 + 2.0 * ax * ax * ax / 27.0 - ax / 3.0 * b
    cdef double disc = p * p * p / 27.0 + q * q / 4.0
    cdef double dd, a, u, m, arg, phi, best, hbest
    cdef double roots[3]
    cdef double objs[3]
    cdef int k
    if disc <= 0.0 and p < 0.0:
        m = 2.0 * sqrt(-p / 3.0)
        arg = 3.0 * (-q) / (2.0 * p) * sqrt(-3.0 / p)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        phi = acos(arg) / 3.0
        for k in range(3):
            roots[k] = _polish(ax / 3.0 + m * cos(phi - 2.0 * PI * k / 3.0), ax, b, g2)
            objs[k] = _objective(roots[k], ax, g2, omega)
        hbest = objs[0]
        for k in range(1, 3):
            if objs[k] < hbest:
                hbest = objs[k]
        # among (near-)optimal roots prefer the largest magnitude
        best = 0.0
        for k in range(3):
            if objs[k] - hbest <= 1e-14 * (1.0 + fabs(hbest)) and fabs(roots[k]) > fabs(best):
                best = roots[k]
        u = best
    else:
        dd = sqrt(disc if disc > 0.0 else 0.0)
        a = cbrt(q / 2.0 + copysign(dd, q))
        if a == 0.0:
            u = ax / 3.0
        else:
            u = ax / 3.0 + a - p / (3.0 * a)
    u = _polish(u, ax, b, g2)
    return copysign(u, xv)


def cauchy_prox(x, double gamma, double omega, int nthreads=1):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    cdef const double[::1] xi = flat
    cdef double[::1] o = out
    cdef Py_ssize_t n = flat.shape[0], i
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        o[i] = _prox_one(xi[i], gamma, omega)
    return out.reshape(arr.shape)
