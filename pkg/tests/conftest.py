import json
from pathlib import Path

import pytest

from oracles import FROZEN

_CRITERIA = {}


@pytest.fixture(scope="session")
def frozen():
    return json.loads(Path(FROZEN).read_text())


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _CRITERIA.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    previous = _CRITERIA_RESULTS.get(number)
    passed = report.outcome == "passed"
    _CRITERIA_RESULTS[number] = (title, passed and (previous is None or previous[1]))


_CRITERIA_RESULTS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            _CRITERIA[item.nodeid] = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA_RESULTS):
        title, passed = _CRITERIA_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")
