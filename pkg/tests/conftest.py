import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# acceptance outcomes, filled by test_acceptance.py and printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
