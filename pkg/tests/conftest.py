import pytest

from primepoints import _accel
from primepoints.forms import standard_quadric
from primepoints.weights import WeightFamily, make_bump

BACKENDS = ["numpy"] + (["numba"] if _accel.NUMBA_AVAILABLE else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    with _accel.use_backend(request.param):
        yield request.param


@pytest.fixture(scope="session")
def quadric():
    return standard_quadric()


@pytest.fixture(scope="session")
def bump():
    return make_bump(0.08)


@pytest.fixture(scope="session")
def quad_family(bump):
    """Standard test weights at X = 100."""
    return WeightFamily(100, (0.3, 0.4, 0.4, 0.3), bump)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
