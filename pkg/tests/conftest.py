"""Shared pytest plumbing for the test suite."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criteria verdicts after capture has ended.

    ``test_acceptance.verdict`` collects one line per criterion; pytest's
    default output capture hides prints from passing tests, so the lines
    are replayed here, where the terminal reporter writes directly to the
    real stdout.
    """
    mod = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(mod, "VERDICT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
