import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record the one-line verdict of an acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number, passed, text):
        lines[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
