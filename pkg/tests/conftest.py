import numpy as np
import pytest

from phaseprune import _kernels
from phaseprune.cmatrix import ComplexMatrix


def random_cm(rng, rows, cols, low=-1.0, high=1.0):
    return ComplexMatrix(rng.uniform(low, high, (rows, cols)), rng.uniform(low, high, (rows, cols)))


def to_pylists(m):
    """ComplexMatrix -> nested lists of python complex (oracle side only)."""
    return [[complex(m.re[i, j], m.im[i, j]) for j in range(m.cols)] for i in range(m.rows)]


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and not _kernels.HAS_NUMBA:
        pytest.skip("numba unavailable")
    prev = _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
