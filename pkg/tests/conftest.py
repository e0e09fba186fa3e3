import sys

import pytest

from vacuum_euler.gas import derive_constants


@pytest.fixture(scope="session")
def p2():
    """gamma = 2, M = 1."""
    return derive_constants(2.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
