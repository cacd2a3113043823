import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion; returns the boolean for asserting."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
