"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the NumPy
implementation is used.  Set ``URVREFINE_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("URVREFINE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

hypot_scaled = _impl.hypot_scaled
givens = _impl.givens
rot_rows = _impl.rot_rows
rot_cols = _impl.rot_cols
odd_sweep = _impl.odd_sweep
even_sweep = _impl.even_sweep
jacobi_sweeps = _impl.jacobi_sweeps

__all__ = [
    "BACKEND",
    "hypot_scaled",
    "givens",
    "rot_rows",
    "rot_cols",
    "odd_sweep",
    "even_sweep",
    "jacobi_sweeps",
]
