import sys

import numpy as np
import pytest

from urvrefine import _kernels_py

try:
    from urvrefine import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(
    pytest.param(
        _kernels_c,
        id="cython",
        marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built"),
    )
)

# worked example (converges) and counterexample (stalls)
EXAMPLE1 = np.array([[1.0, 0.0, 1e-6], [0.0, 2.0, 1e-6], [0.0, 0.0, 10.0]])
COUNTEREXAMPLE = np.array([[1.0, 0.0, 0.0], [0.0, 9.0, 1.0], [0.0, 1.0, 10.0]])
# smallest singular value of [[9, 1], [1, 10]]
BLOCK_LIMIT = (19.0 - np.sqrt(5.0)) / 2.0


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20260417)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda t: int(t.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
