import numpy as np
import pytest

ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance: list[tuple[str, bool]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_runtest_logreport(report):
    path, _, name = report.nodeid.partition("::")
    if not path.endswith(ACCEPTANCE_FILE):
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance.append((name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _acceptance:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
