import sys
import numpy as np
import pytest

from dunkl_qszasz.operator import OperatorParams


@pytest.fixture
def small_params():
    return OperatorParams(n=5, q=0.8, mu=0.5, alpha=1.0, beta=2.0)


SWEEP_N = (5, 20, 100)
SWEEP_Q = (0.5, 0.8, 0.95)
SWEEP_MU = (0.0, 0.5, 2.0)
SWEEP_AB = ((0.0, 0.0), (1.0, 2.0))
SWEEP_X = np.linspace(0.0, 4.0, 21)


def sweep_params():
    for n in SWEEP_N:
        for q in SWEEP_Q:
            for mu in SWEEP_MU:
                for a, b in SWEEP_AB:
                    yield OperatorParams(n, q, mu, a, b)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
