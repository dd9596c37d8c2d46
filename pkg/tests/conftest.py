import math

import pytest

from minimax_subgrad import ErrorBound, HardInstance

SQRT_HALF = 1 / math.sqrt(2)


@pytest.fixture(scope="session")
def hard_sharp():
    """theta = 1, c = 1/sqrt(2), L = D = 1, N = 20."""
    return HardInstance(ErrorBound.holder(SQRT_HALF, 1.0, 1.0), 1.0, 1.0, 20)


@pytest.fixture(scope="session")
def hard_quad():
    """theta = 1/2, c = 0.5 (slope exactly L at D), N = 12."""
    return HardInstance(ErrorBound.holder(0.5, 0.5, 1.0), 1.0, 1.0, 12)


@pytest.fixture(scope="session")
def hard_scaled():
    """Non-unit L and D to exercise the rescaling."""
    return HardInstance(ErrorBound.holder(0.3, 2 / 3, 3.0), 2.0, 3.0, 8)


@pytest.fixture(scope="session")
def hard_custom():
    knots = [[0, 0], [0.25, 0.05], [0.5, 0.15], [1.0, 0.45]]
    return HardInstance(ErrorBound.custom(knots), 1.0, 1.0, 6)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
