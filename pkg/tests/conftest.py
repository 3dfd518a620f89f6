"""Shared pytest plumbing.

Acceptance tests register one verdict line each; the hook below echoes them
as a summary block at the end of the run so the overall gate is readable at
a glance.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
