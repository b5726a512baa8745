"""Reference SVD by one-sided Jacobi, and convergence precondition checks.

Nothing here touches the refinement code path; the oracle is what the
refinement results are judged against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .matrix import MatrixError, UpperTriangular, as_matrix

JACOBI_TOL = 1e-15
JACOBI_MAX_SWEEPS = 60

#: |v_nn| at or below this is reported as numerically zero.
VNN_ZERO_THRESHOLD = 1e-10
#: sigma_{n-1} - sigma_n must exceed this times sigma_1 to count as a gap.
SIMPLE_GAP_THRESHOLD = 1e-12
#: sigma_min(S) must exceed sigma_min(R) by this many units of
#: n * eps * sigma_min(R) before the corollary hypothesis is reported.
COROLLARY_ULPS = 4.0


@dataclass(frozen=True)
class SvdResult:
    """A = U @ diag(sigma) @ V.T with sigma sorted descending."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    sweeps: int = 0
    converged: bool = True

    @property
    def u_last(self) -> np.ndarray:
        """Left singular vector of the smallest singular value."""
        return self.U[:, -1]

    @property
    def v_last(self) -> np.ndarray:
        return self.V[:, -1]

    @property
    def vnn(self) -> float:
        return float(self.V[-1, -1])

    @property
    def unn(self) -> float:
        return float(self.U[-1, -1])

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _complete_basis(U: np.ndarray, missing: list[int]) -> None:
    """Fill columns ``missing`` of U with unit vectors orthogonal to the rest."""
    n = U.shape[0]
    have = [k for k in range(U.shape[1]) if k not in missing]
    basis = [U[:, k] for k in have]
    cand = 0
    for k in missing:
        while True:
            x = np.zeros(n)
            x[cand % n] = 1.0
            cand += 1
            for _ in range(2):
                for b in basis:
                    x -= np.dot(b, x) * b
            nx = np.linalg.norm(x)
            if nx > 0.5:
                break
        x /= nx
        U[:, k] = x
        basis.append(x)


def svd(a) -> SvdResult:
    """Singular value decomposition of a square matrix.

    Columns of a working copy are orthogonalized by cyclic one-sided Jacobi
    rotations until every pair satisfies ``|a_i . a_j| <= 1e-15 |a_i||a_j|``
    (at most 60 sweeps).  Singular values are the final column norms.  Signs
    are fixed so the largest-magnitude entry of each column of V is positive
    (the first one on ties).
    """
    A = as_matrix(a)
    m, n = A.shape
    if m != n:
        raise MatrixError(f"svd needs a square matrix, got {m}x{n}")
    W = A.copy()
    V = np.eye(n)
    sweeps, converged = kernels.jacobi_sweeps(W, V, JACOBI_TOL, JACOBI_MAX_SWEEPS)

    sigma = np.sqrt(np.einsum("ij,ij->j", W, W))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    W = W[:, order]
    V = V[:, order]

    U = np.zeros_like(W)
    missing = []
    for k in range(n):
        if sigma[k] > 0.0:
            U[:, k] = W[:, k] / sigma[k]
        else:
            missing.append(k)
    if missing:
        _complete_basis(U, missing)

    for k in range(n):
        idx = int(np.argmax(np.abs(V[:, k])))
        if V[idx, k] < 0.0:
            V[:, k] = -V[:, k]
            U[:, k] = -U[:, k]
    return SvdResult(U=U, sigma=sigma, V=V, sweeps=sweeps, converged=converged)


def singular_values(a) -> np.ndarray:
    return svd(a).sigma


def sigma_min(a) -> float:
    return float(svd(a).sigma[-1])


class Verdict(str, enum.Enum):
    GUARANTEED_MS = "GUARANTEED_MS"
    GUARANTEED_COROLLARY = "GUARANTEED_COROLLARY"
    LIKELY = "LIKELY"
    STATIONARY_RISK = "STATIONARY_RISK"


@dataclass(frozen=True)
class PreconditionReport:
    """Which convergence hypotheses hold for a triangular matrix.

    ``rho`` is |e| / sigma_min(S) for the leading block S and corner e.
    """

    n: int
    rho: float
    sigma: tuple
    sigma_min_S: float
    vnn: float
    unn: float
    vnn_threshold: float
    rho_lt_one: bool
    vnn_nonzero: bool
    sigma_gap_simple: bool
    smin_S_gt_smin_R: bool
    verdict: Verdict

    @property
    def sigma_min_R(self) -> float:
        return self.sigma[-1]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rho": self.rho,
            "sigma": list(self.sigma),
            "sigma_min_S": self.sigma_min_S,
            "sigma_min_R": self.sigma_min_R,
            "vnn": self.vnn,
            "unn": self.unn,
            "vnn_threshold": self.vnn_threshold,
            "rho_lt_one": self.rho_lt_one,
            "vnn_nonzero": self.vnn_nonzero,
            "sigma_gap_simple": self.sigma_gap_simple,
            "smin_S_gt_smin_R": self.smin_S_gt_smin_R,
            "verdict": self.verdict.value,
        }


def check_preconditions(R, vnn_threshold: float = VNN_ZERO_THRESHOLD,
                        gap_threshold: float = SIMPLE_GAP_THRESHOLD) -> PreconditionReport:
    """Classify R by which convergence guarantee applies.

    Verdicts, first match wins:

    * ``GUARANTEED_MS`` -- rho < 1.
    * ``STATIONARY_RISK`` -- v_nn is numerically zero, so the corner can
      stall at a larger singular value.
    * ``GUARANTEED_COROLLARY`` -- sigma_min(S) > sigma_min(R) beyond
      rounding (``COROLLARY_ULPS * n * eps`` relative).  This forces a
      simple sigma_n and v_nn != 0.
    * ``LIKELY`` -- only |v_nn| > ``vnn_threshold`` is known.

    The corollary slack is relative to sigma_min(R), not sigma_1: graded
    matrices such as ``[[1, 0, 1e-6], [0, 2, 1e-6], [0, 0, 10]]`` have a
    gap of a few ulps that the Jacobi oracle resolves correctly.
    """
    if not isinstance(R, UpperTriangular):
        R = UpperTriangular(R)
    n = R.n
    if n < 2:
        raise MatrixError("preconditions need n >= 2")
    full = svd(R.array)
    smin_S = sigma_min(R.S)
    e = abs(R.e)
    rho = e / smin_S
    sigma = full.sigma
    scale = float(sigma[0])
    vnn = full.vnn
    rho_lt_one = bool(rho < 1.0)
    vnn_nonzero = bool(abs(vnn) > vnn_threshold)
    simple = bool(float(sigma[-2] - sigma[-1]) > gap_threshold * scale)
    slack = COROLLARY_ULPS * n * np.finfo(float).eps * float(sigma[-1])
    smin_gt = bool((smin_S - float(sigma[-1])) > slack)

    if rho_lt_one:
        verdict = Verdict.GUARANTEED_MS
    elif not vnn_nonzero:
        verdict = Verdict.STATIONARY_RISK
    elif smin_gt:
        verdict = Verdict.GUARANTEED_COROLLARY
    else:
        verdict = Verdict.LIKELY
    return PreconditionReport(
        n=n,
        rho=rho,
        sigma=tuple(float(x) for x in sigma),
        sigma_min_S=smin_S,
        vnn=vnn,
        unn=full.unn,
        vnn_threshold=vnn_threshold,
        rho_lt_one=rho_lt_one,
        vnn_nonzero=vnn_nonzero,
        sigma_gap_simple=simple,
        smin_S_gt_smin_R=smin_gt,
        verdict=verdict,
    )
