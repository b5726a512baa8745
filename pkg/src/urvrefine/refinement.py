"""URV refinement: alternating right and left Givens sweeps.

Starting from an upper triangular ``R = [[S, h], [0, e]]`` an odd sweep
applies rotations from the right that zero ``h`` and push the coupling into
the last row, ``[[S, 0], [h', e']]``; an even sweep applies rotations from
the left that restore triangular form.  The corner ``e`` is nonincreasing
and, when the last component of the smallest right singular vector is
nonzero, converges to the smallest singular value.

Half-sweeps are counted by ``l``: even ``l`` is triangular, odd ``l`` has
the filled last row.  The accumulated factors satisfy
``G_even @ R0 @ G_odd.T == R`` at every ``l``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .matrix import MatrixError, UpperTriangular, frobenius_norm, two_norm_vector


class RefinementError(RuntimeError):
    """Raised when an operation is called in the wrong state."""


@dataclass
class IterationRecord:
    l: int
    e: float
    h_norm: float
    rho: float | None = None
    corner_flipped: bool = False
    rotations: int = 0


@dataclass(frozen=True)
class Snapshot:
    """Copy of the iterate and factors after half-sweep ``l``."""

    l: int
    R: np.ndarray
    G_odd: np.ndarray | None
    G_even: np.ndarray | None


@dataclass(frozen=True)
class RefineOptions:
    """Stopping rules and bookkeeping switches for :func:`refine`.

    ``tol_h`` is relative to ``||R0||_F`` and ``tol_e_stagnation`` to the
    current corner.  Either may be 0 to disable that test.
    """

    tol_h: float = 1e-14
    tol_e_stagnation: float = 1e-15
    max_double_sweeps: int = 1000
    record_rho: bool = False
    accumulate_factors: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        if self.tol_h < 0 or self.tol_e_stagnation < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.max_double_sweeps < 1:
            raise ValueError("max_double_sweeps must be >= 1")


class StopReason(str, enum.Enum):
    H_NORM_TOL = "H_NORM_TOL"
    E_STAGNATION = "E_STAGNATION"
    MAX_ITER = "MAX_ITER"


@dataclass
class RefinementState:
    R0: np.ndarray
    R: np.ndarray
    l: int = 0
    G_odd: np.ndarray | None = None
    G_even: np.ndarray | None = None
    history: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    record_rho: bool = False
    keep_iterates: bool = False

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def e(self) -> float:
        return float(self.R[-1, -1])

    @property
    def S(self) -> np.ndarray:
        return self.R[:-1, :-1].copy()

    @property
    def h(self) -> np.ndarray:
        """Off-diagonal coupling: last column (even l) or last row (odd l)."""
        if self.l % 2 == 0:
            return self.R[:-1, -1].copy()
        return self.R[-1, :-1].copy()

    @property
    def accumulating(self) -> bool:
        return self.G_odd is not None

    @property
    def g_odd(self) -> np.ndarray:
        """Last row of the accumulated right factor."""
        self._need_factors()
        return self.G_odd[-1].copy()

    @property
    def g_even(self) -> np.ndarray:
        self._need_factors()
        return self.G_even[-1].copy()

    def _need_factors(self):
        if not self.accumulating:
            raise RefinementError("orthogonal factors were not accumulated")

    def reconstruct(self) -> np.ndarray:
        """G_even @ R0 @ G_odd.T, which equals R up to rounding."""
        self._need_factors()
        return self.G_even @ self.R0 @ self.G_odd.T


def _h_norm(R: np.ndarray, l: int) -> float:
    if l % 2 == 0:
        return two_norm_vector(R[:-1, -1])
    return two_norm_vector(R[-1, :-1])


def _rho(R: np.ndarray) -> float:
    from .oracle import sigma_min

    return abs(float(R[-1, -1])) / sigma_min(R[:-1, :-1])


def _record(state: RefinementState, flipped: bool, rotations: int) -> None:
    rho = _rho(state.R) if state.record_rho else None
    state.history.append(
        IterationRecord(
            l=state.l,
            e=state.e,
            h_norm=_h_norm(state.R, state.l),
            rho=rho,
            corner_flipped=flipped,
            rotations=rotations,
        )
    )
    if state.keep_iterates:
        state.snapshots.append(
            Snapshot(
                l=state.l,
                R=state.R.copy(),
                G_odd=None if state.G_odd is None else state.G_odd.copy(),
                G_even=None if state.G_even is None else state.G_even.copy(),
            )
        )


def init(R0, opts: RefineOptions | None = None) -> RefinementState:
    """Start a refinement at l = 0.

    A negative corner is made positive by negating the last row; the sign
    change is absorbed into ``G_even`` so the factor identity still refers
    to the caller's ``R0``.
    """
    opts = opts or RefineOptions()
    if not isinstance(R0, UpperTriangular):
        R0 = UpperTriangular(R0)
    n = R0.n
    if n < 2:
        raise MatrixError("refinement needs n >= 2")
    original = R0.array
    R = original.copy()
    flipped = R[-1, -1] < 0.0
    G_odd = G_even = None
    if opts.accumulate_factors:
        G_odd = np.eye(n)
        G_even = np.eye(n)
    if flipped:
        R[-1] = -R[-1]
        if G_even is not None:
            G_even[-1, -1] = -1.0
    state = RefinementState(
        R0=original,
        R=R,
        G_odd=G_odd,
        G_even=G_even,
        record_rho=opts.record_rho,
        keep_iterates=opts.keep_iterates,
    )
    _record(state, flipped, 0)
    return state


def odd_sweep(state: RefinementState) -> RefinementState:
    """Rotate from the right to zero the last column above the diagonal.

    Rotations act in planes (i, n) for i = n-1 down to 1 (1-based), each
    zeroing entry (i, n) against the pivot (i, i).  A negative corner is
    fixed by negating the last column, absorbed into ``G_odd``.
    """
    if state.l % 2 != 0:
        raise RefinementError(f"odd sweep needs an even half-sweep index, l = {state.l}")
    rotations = kernels.odd_sweep(state.R, state.G_odd)
    flipped = state.R[-1, -1] < 0.0
    if flipped:
        state.R[:, -1] = -state.R[:, -1]
        if state.G_odd is not None:
            state.G_odd[-1] = -state.G_odd[-1]
    state.l += 1
    _record(state, flipped, rotations)
    return state


def even_sweep(state: RefinementState) -> RefinementState:
    """Rotate from the left to zero the last row left of the diagonal.

    Rotations act in planes (i, n) for i = 1 up to n-1, zeroing entry
    (n, i) against the pivot (i, i).
    """
    if state.l % 2 != 1:
        raise RefinementError(f"even sweep needs an odd half-sweep index, l = {state.l}")
    rotations = kernels.even_sweep(state.R, state.G_even)
    flipped = state.R[-1, -1] < 0.0
    if flipped:
        state.R[-1] = -state.R[-1]
        if state.G_even is not None:
            state.G_even[-1] = -state.G_even[-1]
    state.l += 1
    _record(state, flipped, rotations)
    return state


@dataclass
class ConvergenceReport:
    converged: bool
    reason: StopReason
    double_sweeps: int
    final_e: float
    final_state: RefinementState

    @property
    def history(self) -> list:
        return self.final_state.history


def refine(R0, opts: RefineOptions | None = None) -> ConvergenceReport:
    """Run double sweeps until the coupling or the corner settles.

    After each double sweep the run stops when
    ``||h|| <= tol_h * ||R0||_F`` (``H_NORM_TOL``), else when the corner
    moved by at most ``tol_e_stagnation * e`` (``E_STAGNATION``), else after
    ``max_double_sweeps`` (``MAX_ITER``).
    """
    opts = opts or RefineOptions()
    state = init(R0, opts)
    h_limit = opts.tol_h * frobenius_norm(state.R0)
    reason = StopReason.MAX_ITER
    k = 0
    while k < opts.max_double_sweeps:
        e_prev = state.e
        odd_sweep(state)
        even_sweep(state)
        k += 1
        e = state.e
        if state.history[-1].h_norm <= h_limit:
            reason = StopReason.H_NORM_TOL
            break
        if abs(e_prev - e) <= opts.tol_e_stagnation * e:
            reason = StopReason.E_STAGNATION
            break
    return ConvergenceReport(
        converged=reason is not StopReason.MAX_ITER,
        reason=reason,
        double_sweeps=k,
        final_e=state.e,
        final_state=state,
    )


def alignment(state: RefinementState, svd0) -> tuple[float, float]:
    """Inner products of the factors' last rows with the initial singular vectors.

    Returns ``(g_odd . v0, g_even . u0)`` where ``v0``/``u0`` are the
    right/left singular vectors of the smallest singular value of ``R0``.
    """
    state._need_factors()
    align_v = float(np.dot(state.G_odd[-1], svd0.V[:, -1]))
    align_u = float(np.dot(state.G_even[-1], svd0.U[:, -1]))
    return align_v, align_u


@dataclass
class URVResult:
    U: np.ndarray
    R: np.ndarray
    V: np.ndarray
    numerical_rank: int
    threshold: float
    deflations: int
    reports: list = field(default_factory=list)


def rank_revealing_urv(R0, rank_tol: float, opts: RefineOptions | None = None) -> URVResult:
    """Refine-and-deflate until the trailing corners reveal the rank.

    The leading m x m block is refined; if its corner falls below
    ``rank_tol * max|diag(R0)|`` the block shrinks by one and the process
    repeats.  Returns orthogonal U, V and triangular R with ``U @ R @ V.T``
    equal to ``R0``.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    opts = replace(opts or RefineOptions(), accumulate_factors=True,
                   record_rho=False, keep_iterates=False)
    if not isinstance(R0, UpperTriangular):
        R0 = UpperTriangular(R0)
    R = R0.array
    n = R0.n
    U = np.eye(n)
    V = np.eye(n)
    threshold = rank_tol * float(np.max(np.abs(np.diag(R))))
    reports = []
    deflations = 0
    m = n
    while m >= 2:
        block = R[:m, :m]
        rep = refine(block, opts)
        reports.append(rep)
        st = rep.final_state
        R[:m, :m] = st.R
        R[:m, m:] = st.G_even @ R[:m, m:]
        U[:, :m] = U[:, :m] @ st.G_even.T
        V[:, :m] = V[:, :m] @ st.G_odd.T
        if abs(R[m - 1, m - 1]) < threshold:
            m -= 1
            deflations += 1
        else:
            break
    rank = int(np.sum(np.abs(np.diag(R)) >= threshold))
    return URVResult(U=U, R=R, V=V, numerical_rank=rank, threshold=threshold,
                     deflations=deflations, reports=reports)
