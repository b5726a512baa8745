"""Pure-Python/NumPy kernels.

Reference implementation of the hot loops in ``_kernels.pyx``.  The sweep
kernels perform the same floating point operations in the same order as the
extension (compiled with ``-ffp-contract=off``), so the two backends agree
bitwise on refinement.  The Jacobi kernel uses BLAS dot products here and
agrees only to rounding.
"""

import math

import numpy as np


def hypot_scaled(a, b):
    """sqrt(a**2 + b**2) with scaling against overflow and underflow."""
    a = abs(a)
    b = abs(b)
    if a < b:
        a, b = b, a
    if a == 0.0:
        return 0.0
    t = b / a
    return a * math.sqrt(1.0 + t * t)


def givens(a, b):
    """Return (c, s, r) with c*a + s*b = r >= 0 and -s*a + c*b = 0.

    c and s come from the ratio of the smaller to the larger input, which
    stays accurate for subnormal arguments where a / r would not.
    """
    if b == 0.0:
        if a == 0.0:
            return 1.0, 0.0, 0.0
        return math.copysign(1.0, a), 0.0, abs(a)
    if abs(a) >= abs(b):
        t = b / a
        u = math.sqrt(1.0 + t * t)
        sign = math.copysign(1.0, a)
        return sign / u, sign * (t / u), abs(a) * u
    t = a / b
    u = math.sqrt(1.0 + t * t)
    sign = math.copysign(1.0, b)
    return sign * (t / u), sign / u, abs(b) * u


def rot_rows(M, i, j, c, s):
    """In place: row_i <- c*row_i + s*row_j, row_j <- -s*row_i + c*row_j."""
    x = M[i].copy()
    y = M[j].copy()
    M[i] = c * x + s * y
    M[j] = c * y - s * x


def rot_cols(M, i, j, c, s):
    """Column analogue of :func:`rot_rows`."""
    x = M[:, i].copy()
    y = M[:, j].copy()
    M[:, i] = c * x + s * y
    M[:, j] = c * y - s * x


def odd_sweep(R, G):
    """Right sweep: zero R[i, n-1] for i = n-2..0 against pivot R[i, i].

    ``G`` (or None) is left-multiplied by each rotation.  Returns the number
    of non-identity rotations applied.
    """
    n = R.shape[0]
    p = n - 1
    count = 0
    for i in range(p - 1, -1, -1):
        b = R[i, p]
        if b == 0.0:
            continue
        c, s, r = givens(R[i, i], b)
        # rows 0..i and the last row are the only nonzeros in columns i, p
        x = R[: i + 1, i].copy()
        y = R[: i + 1, p].copy()
        R[: i + 1, i] = c * x + s * y
        R[: i + 1, p] = c * y - s * x
        xp = R[p, i]
        yp = R[p, p]
        R[p, i] = c * xp + s * yp
        R[p, p] = c * yp - s * xp
        R[i, i] = r
        R[i, p] = 0.0
        if G is not None:
            rot_rows(G, i, p, c, s)
        count += 1
    return count


def even_sweep(R, G):
    """Left sweep: zero R[n-1, i] for i = 0..n-2 against pivot R[i, i]."""
    n = R.shape[0]
    p = n - 1
    count = 0
    for i in range(p):
        b = R[p, i]
        if b == 0.0:
            continue
        c, s, r = givens(R[i, i], b)
        x = R[i, i:].copy()
        y = R[p, i:].copy()
        R[i, i:] = c * x + s * y
        R[p, i:] = c * y - s * x
        R[i, i] = r
        R[p, i] = 0.0
        if G is not None:
            rot_rows(G, i, p, c, s)
        count += 1
    return count


def jacobi_sweeps(W, V, tol, max_sweeps):
    """One-sided Jacobi orthogonalization of the columns of ``W`` in place.

    Rotations are accumulated into ``V`` so that the input equals
    ``W @ V.T`` on exit.  Sweeps stop once no pair has
    ``|w_i . w_j| > tol * |w_i| |w_j|``.  Returns (sweeps, converged).
    """
    n = W.shape[1]
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                wi = W[:, i]
                wj = W[:, j]
                alpha = float(np.dot(wi, wi))
                beta = float(np.dot(wj, wj))
                gamma = float(np.dot(wi, wj))
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha) * math.sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                rot_cols(W, i, j, c, -s)
                rot_cols(V, i, j, c, -s)
        if not rotated:
            return sweep, True
    return max_sweeps, False
