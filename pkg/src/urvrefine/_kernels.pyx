# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_kernels_py``."""

from libc.math cimport sqrt, fabs, copysign

import numpy as np


cdef inline double _hypot(double a, double b) nogil:
    cdef double t
    a = fabs(a)
    b = fabs(b)
    if a < b:
        a, b = b, a
    if a == 0.0:
        return 0.0
    t = b / a
    return a * sqrt(1.0 + t * t)


def hypot_scaled(double a, double b):
    return _hypot(a, b)


cdef inline void _givens(double a, double b, double *c, double *s, double *r) nogil:
    cdef double t, u, sign
    if b == 0.0:
        if a == 0.0:
            c[0] = 1.0
            s[0] = 0.0
            r[0] = 0.0
        else:
            c[0] = copysign(1.0, a)
            s[0] = 0.0
            r[0] = fabs(a)
    elif fabs(a) >= fabs(b):
        t = b / a
        u = sqrt(1.0 + t * t)
        sign = copysign(1.0, a)
        c[0] = sign / u
        s[0] = sign * (t / u)
        r[0] = fabs(a) * u
    else:
        t = a / b
        u = sqrt(1.0 + t * t)
        sign = copysign(1.0, b)
        c[0] = sign * (t / u)
        s[0] = sign / u
        r[0] = fabs(b) * u


def givens(double a, double b):
    cdef double c, s, r
    _givens(a, b, &c, &s, &r)
    return c, s, r


cdef inline void _rot_rows(double[:, ::1] M, Py_ssize_t i, Py_ssize_t j,
                           double c, double s, Py_ssize_t start) nogil:
    cdef Py_ssize_t k
    cdef double x, y
    for k in range(start, M.shape[1]):
        x = M[i, k]
        y = M[j, k]
        M[i, k] = c * x + s * y
        M[j, k] = c * y - s * x


cdef inline void _rot_cols(double[:, ::1] M, Py_ssize_t i, Py_ssize_t j,
                           double c, double s) nogil:
    cdef Py_ssize_t k
    cdef double x, y
    for k in range(M.shape[0]):
        x = M[k, i]
        y = M[k, j]
        M[k, i] = c * x + s * y
        M[k, j] = c * y - s * x


def rot_rows(double[:, ::1] M, Py_ssize_t i, Py_ssize_t j, double c, double s):
    _rot_rows(M, i, j, c, s, 0)


def rot_cols(double[:, ::1] M, Py_ssize_t i, Py_ssize_t j, double c, double s):
    _rot_cols(M, i, j, c, s)


def odd_sweep(double[:, ::1] R, G):
    cdef Py_ssize_t n = R.shape[0]
    cdef Py_ssize_t p = n - 1
    cdef Py_ssize_t i, k
    cdef double b, c, s, r, x, y
    cdef int count = 0
    cdef bint acc = G is not None
    cdef double[:, ::1] Gv
    if acc:
        Gv = G
    for i in range(p - 1, -1, -1):
        b = R[i, p]
        if b == 0.0:
            continue
        _givens(R[i, i], b, &c, &s, &r)
        for k in range(i + 1):
            x = R[k, i]
            y = R[k, p]
            R[k, i] = c * x + s * y
            R[k, p] = c * y - s * x
        x = R[p, i]
        y = R[p, p]
        R[p, i] = c * x + s * y
        R[p, p] = c * y - s * x
        R[i, i] = r
        R[i, p] = 0.0
        if acc:
            _rot_rows(Gv, i, p, c, s, 0)
        count += 1
    return count


def even_sweep(double[:, ::1] R, G):
    cdef Py_ssize_t n = R.shape[0]
    cdef Py_ssize_t p = n - 1
    cdef Py_ssize_t i
    cdef double b, c, s, r
    cdef int count = 0
    cdef bint acc = G is not None
    cdef double[:, ::1] Gv
    if acc:
        Gv = G
    for i in range(p):
        b = R[p, i]
        if b == 0.0:
            continue
        _givens(R[i, i], b, &c, &s, &r)
        _rot_rows(R, i, p, c, s, i)
        R[i, i] = r
        R[p, i] = 0.0
        if acc:
            _rot_rows(Gv, i, p, c, s, 0)
        count += 1
    return count


def jacobi_sweeps(double[:, ::1] W, double[:, ::1] V, double tol, int max_sweeps):
    cdef Py_ssize_t m = W.shape[0]
    cdef Py_ssize_t n = W.shape[1]
    cdef Py_ssize_t i, j, k
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, gamma, zeta, t, c, s
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(m):
                    alpha += W[k, i] * W[k, i]
                    beta += W[k, j] * W[k, j]
                    gamma += W[k, i] * W[k, j]
                if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha) * sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                _rot_cols(W, i, j, c, -s)
                _rot_cols(V, i, j, c, -s)
        if not rotated:
            return sweep, True
    return max_sweeps, False
