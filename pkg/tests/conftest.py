"""Shared test plumbing: acceptance checks announce one PASS/FAIL line each,
collected into a terminal summary section so every run shows the scoreboard."""

import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record and print a single acceptance verdict line.

    Returns the `ok` flag so callers can write `assert acceptance(...)`; the
    line is recorded before the assertion fires, so failures still show up in
    the summary.
    """

    def _record(number: int, description: str, ok: bool, detail: str = "") -> bool:
        verdict = "PASS" if ok else "FAIL"
        line = f"ACCEPTANCE {number}: {verdict} - {description}"
        if detail:
            line += f" [{detail}]"
        _LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.line(line)
