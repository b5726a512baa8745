"""URV refinement of nonsingular upper triangular matrices.

The corner element of the iterate is driven down to the smallest singular
value by alternating right and left Givens sweeps; an independent one-sided
Jacobi SVD serves as the reference for every check.
"""

__version__ = "0.1.0"

from .diagnostics import (  # noqa: E402
    Check,
    MatrixSpec,
    MonitorReport,
    MonitorTolerances,
    VnnMode,
    generate_test_matrix,
    random_upper_triangular,
    run_monitors,
    triangularize,
)
from .io import MatrixParseError, parse_matrix  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .matrix import (  # noqa: E402
    GivensRotation,
    MatrixError,
    UpperTriangular,
    apply_left,
    apply_right,
    frobenius_norm,
    givens_compute,
    identity,
    matmul,
    transpose,
    two_norm_vector,
)
from .oracle import PreconditionReport, SvdResult, Verdict, check_preconditions, sigma_min, svd  # noqa: E402
from .refinement import (  # noqa: E402
    ConvergenceReport,
    IterationRecord,
    RefinementError,
    RefinementState,
    RefineOptions,
    StopReason,
    alignment,
    even_sweep,
    init,
    odd_sweep,
    rank_revealing_urv,
    refine,
)
