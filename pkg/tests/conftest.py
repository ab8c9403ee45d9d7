import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def conll_fixtures():
    return sorted((FIXTURES / "conll").glob("*.conll"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    results = item.config._criteria.setdefault(marker.args[0], [])
    results.append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    criteria = config._criteria
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(criteria):
        ok = all(passed for _, passed in criteria[n])
        names = ", ".join(name for name, _ in criteria[n])
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  ({names})")
