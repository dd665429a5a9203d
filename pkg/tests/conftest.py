import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            _CRITERIA.setdefault(number, {"title": title, "outcomes": {}})
            _CRITERIA[number]["outcomes"][item.nodeid] = "not run"


def pytest_runtest_logreport(report):
    for entry in _CRITERIA.values():
        if report.nodeid in entry["outcomes"]:
            if report.failed:
                entry["outcomes"][report.nodeid] = "failed"
            elif report.when == "call" and report.passed:
                entry["outcomes"][report.nodeid] = "passed"
            elif report.skipped:
                entry["outcomes"][report.nodeid] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        bad = [nid for nid, o in outcomes.items() if o != "passed"]
        status = "PASS" if not bad else "FAIL"
        tr.write_line(f"criterion {number}: {status}  {entry['title']} "
                      f"({len(outcomes) - len(bad)}/{len(outcomes)} checks passed)")
        for nid in bad:
            tr.write_line(f"    {outcomes[nid]}: {nid}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
