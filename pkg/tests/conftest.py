import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_logreport(report):
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        ok = report.outcome == "passed"
        prev = _RESULTS.get(crit, (True, []))
        _RESULTS[crit] = (prev[0] and ok, prev[1] + ([] if ok else [report.nodeid.split("::")[-1]]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result()._criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), (ok, failed) in sorted(_RESULTS.items()):
        line = f"criterion {num} ({title}): {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  [failing: " + ", ".join(failed) + "]"
        terminalreporter.write_line(line)
