import sys
from pathlib import Path

import pytest

# make the oracle module importable from every test file
sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the test fails when the criterion does."""

    def report(number: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        assert ok, detail

    return report


def pytest_runtest_logreport(report):
    num = getattr(report, "acceptance_number", None)
    # a criterion that crashes before reporting still gets its line
    if num is not None and report.failed and num not in _ACCEPTANCE:
        _ACCEPTANCE[num] = f"FAIL  criterion {num}: error during {report.when}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_number = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
