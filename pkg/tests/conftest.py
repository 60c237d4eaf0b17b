import numpy as np
import pytest

from rkhs_pg.kernels import KernelSpec, RkhsFunction


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_function(rng, M=None, n=None, p=None, spread=1.0):
    n = n or int(rng.integers(1, 4))
    p = p or int(rng.integers(1, 3))
    M = int(rng.integers(0, 7)) if M is None else M
    kernel = KernelSpec(tuple(rng.uniform(0.2, 2.0, n)))
    return RkhsFunction(kernel, spread * rng.normal(size=(M, n)), rng.normal(size=(M, p)), p)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
