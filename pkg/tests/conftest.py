import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# (criterion number, line) pairs filled by test_acceptance; echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
