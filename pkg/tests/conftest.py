import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_support import REPORT  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: criterion-level acceptance checks (long running)")


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for key in sorted(REPORT, key=lambda k: int(k[1:])):
            terminalreporter.write_line(REPORT[key])
