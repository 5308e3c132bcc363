"""Prints one PASS/FAIL line per acceptance criterion after the run."""

import re

_AC = re.compile(r"test_acceptance\.py::test_ac(\d+)_")
_results = {}


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        _results[k] = _results.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        terminalreporter.write_line(f"AC-{k} {'PASS' if _results[k] else 'FAIL'}")
