import pytest

_RESULTS: dict[int, str] = {}


@pytest.fixture
def record():
    """Register one acceptance line; the test still asserts on its own."""

    def _record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _RESULTS[number] = line
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])
