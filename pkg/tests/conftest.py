"""Shared test plumbing.

The acceptance tests register their one-line pass/fail reports here; the
terminal-summary hook prints them after the run so they survive pytest's
output capture and show up in plain `pytest -v` logs.
"""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
