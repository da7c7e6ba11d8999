import sys
from pathlib import Path

# oracles.py lives next to the test modules; make it importable when
# pytest is invoked from anywhere.
sys.path.insert(0, str(Path(__file__).parent))

SCORECARD: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance scorecard after the normal summary.

    test_acceptance appends one line per criterion; showing them here
    keeps the pass/fail verdicts visible whether or not -s was given.
    """
    if not SCORECARD:
        return
    terminalreporter.section("acceptance criteria")
    for line in SCORECARD:
        terminalreporter.write_line(line)
