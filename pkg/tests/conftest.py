import math

import pytest

OMEGA0 = 2 * math.pi * 1e6


@pytest.fixture
def omega0():
    return OMEGA0


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(results):
        terminalreporter.write_line(results[i])
