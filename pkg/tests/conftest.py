import pytest

_REPORT = []


@pytest.fixture(scope="session")
def report():
    """Collects one status line per acceptance criterion."""
    def add(number, passed, detail):
        _REPORT.append((number, "PASS" if passed else "FAIL", detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(_REPORT):
        terminalreporter.write_line(f"criterion {number:>2}: {status} | {detail}")
