import pytest

_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """report(number, passed, detail) records one acceptance line and returns passed."""

    def report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[key])
