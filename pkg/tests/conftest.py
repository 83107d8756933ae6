import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def report():
    """Record and print one pass/fail line per acceptance check."""

    def _report(label: str, ok: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        print(line)
        _VERDICTS.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
