import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Print and record one acceptance verdict line, then assert it."""

    def report(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"CRITERION {number:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        _VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
