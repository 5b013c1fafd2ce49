import numpy as np
import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; the lines are
    printed in the terminal summary as well as to captured stdout."""

    def record(number, ok, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
