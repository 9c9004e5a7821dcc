"""Shared test plumbing: the acceptance-criteria scoreboard.

Acceptance tests record one verdict line each; the terminal summary
prints them after the run so the scoreboard is visible without -s.
"""

_VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in _VERDICTS:
        terminalreporter.write_line(line)
