import numpy as np
import pytest

from mpinvert.operators import builtin

POLY_BUILTINS = ["quintic1d", "planar", "pure-cubic", "cube-minus-x", "square", "linear"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=POLY_BUILTINS)
def poly_op(request):
    return builtin(request.param)


_ACCEPTANCE = []


def record_acceptance(line):
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
