"""Dense matrices, upper triangular matrices and plane rotations.

Matrices are plain ``float64`` NumPy arrays stored row-major.  The helpers
here validate them, and :class:`UpperTriangular` wraps the one object the
refinement iteration works on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels


class MatrixError(ValueError):
    """Raised when a matrix violates a structural requirement."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite, C-contiguous 2-D float64 array (a copy)."""
    m = np.array(a, dtype=np.float64, order="C", copy=True)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise MatrixError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        i, j = np.argwhere(~np.isfinite(m))[0]
        raise MatrixError(f"non-finite entry at ({i + 1}, {j + 1})")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.float64)


def transpose(m: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(m).T)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[0]:
        raise MatrixError(f"shape mismatch {a.shape} x {b.shape}")
    return a @ b


def frobenius_norm(m: np.ndarray) -> float:
    """Frobenius norm with scaling; summation is exactly rounded."""
    flat = np.asarray(m, dtype=np.float64).ravel()
    scale = float(np.max(np.abs(flat))) if flat.size else 0.0
    if scale == 0.0:
        return 0.0
    scaled = flat / scale
    return scale * math.sqrt(math.fsum((scaled * scaled).tolist()))


def two_norm_vector(v) -> float:
    return frobenius_norm(np.asarray(v, dtype=np.float64))


def first_lower_violation(m: np.ndarray) -> tuple[int, int] | None:
    """0-based (i, j) of the first nonzero below the diagonal, row-major."""
    below = np.tril(np.asarray(m), -1)
    idx = np.argwhere(below != 0.0)
    if idx.size == 0:
        return None
    i, j = idx[0]
    return int(i), int(j)


class UpperTriangular:
    """Square nonsingular upper triangular matrix.

    Entries below the diagonal must be exactly zero and every diagonal entry
    nonzero.  The wrapped array is a private copy; ``array`` returns another
    copy so instances behave as values.
    """

    __slots__ = ("_a",)

    def __init__(self, a):
        m = as_matrix(a)
        if m.shape[0] != m.shape[1]:
            raise MatrixError(f"matrix must be square, got {m.shape[0]}x{m.shape[1]}")
        bad = first_lower_violation(m)
        if bad is not None:
            i, j = bad
            raise MatrixError(
                f"matrix is not upper triangular: entry ({i + 1}, {j + 1}) = {m[i, j]:.17g}"
            )
        zeros = np.flatnonzero(np.diag(m) == 0.0)
        if zeros.size:
            k = int(zeros[0])
            raise MatrixError(f"matrix is singular: diagonal entry ({k + 1}, {k + 1}) is zero")
        self._a = m

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a.copy()

    def __array__(self, dtype=None, copy=None):
        return self._a.copy() if dtype is None else self._a.astype(dtype)

    def __getitem__(self, key):
        return self._a[key]

    @property
    def S(self) -> np.ndarray:
        """Leading (n-1)x(n-1) block."""
        return self._a[:-1, :-1].copy()

    @property
    def h(self) -> np.ndarray:
        """Last column above the diagonal."""
        return self._a[:-1, -1].copy()

    @property
    def e(self) -> float:
        """Trailing corner element."""
        return float(self._a[-1, -1])

    def __repr__(self):
        return f"UpperTriangular({self._a.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, UpperTriangular):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    __hash__ = None


class GivensParams(NamedTuple):
    c: float
    s: float
    r: float

    @property
    def degenerate(self) -> bool:
        """True when both inputs were zero and the identity was returned."""
        return self.r == 0.0


def givens_compute(a: float, b: float) -> GivensParams:
    """Rotation mapping the pair (a, b) to (r, 0) with r >= 0.

    Uses the convention ``c*a + s*b = r`` and ``-s*a + c*b = 0``.  When
    ``a == b == 0`` the identity is returned with ``r = 0``.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise MatrixError("givens_compute needs finite inputs")
    return GivensParams(*kernels.givens(a, b))


@dataclass(frozen=True)
class GivensRotation:
    """Plane rotation acting on indices ``i < j`` (0-based)."""

    i: int
    j: int
    c: float
    s: float

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise MatrixError(f"rotation needs 0 <= i < j, got i={self.i}, j={self.j}")
        norm = self.c * self.c + self.s * self.s
        if abs(norm - 1.0) > 4 * np.finfo(float).eps:
            raise MatrixError(f"c**2 + s**2 = {norm!r} is not 1")

    @classmethod
    def zeroing(cls, i: int, j: int, a: float, b: float) -> "GivensRotation":
        """Rotation in plane (i, j) sending (a, b) to (r, 0)."""
        c, s, _ = givens_compute(a, b)
        return cls(i, j, c, s)

    def inverse(self) -> "GivensRotation":
        return GivensRotation(self.i, self.j, self.c, -self.s)

    def as_matrix(self, n: int) -> np.ndarray:
        """Dense n x n matrix J such that apply_left(M, g) == J @ M."""
        if self.j >= n:
            raise MatrixError(f"rotation plane ({self.i}, {self.j}) outside order {n}")
        J = identity(n)
        J[self.i, self.i] = self.c
        J[self.j, self.j] = self.c
        J[self.i, self.j] = self.s
        J[self.j, self.i] = -self.s
        return J


def apply_left(m, g: GivensRotation) -> np.ndarray:
    """Return J @ M: rows i and j mixed, other rows copied unchanged."""
    out = as_matrix(m)
    if g.j >= out.shape[0]:
        raise MatrixError(f"row index {g.j} out of range for {out.shape[0]} rows")
    kernels.rot_rows(out, g.i, g.j, g.c, g.s)
    return out


def apply_right(m, g: GivensRotation) -> np.ndarray:
    """Return M @ J.T, the column analogue of :func:`apply_left`."""
    out = as_matrix(m)
    if g.j >= out.shape[1]:
        raise MatrixError(f"column index {g.j} out of range for {out.shape[1]} columns")
    kernels.rot_cols(out, g.i, g.j, g.c, g.s)
    return out
