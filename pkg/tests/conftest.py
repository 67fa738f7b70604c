"""Prints a one-line pass/fail verdict per acceptance criterion."""

import re

_results = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m and report.when == "call":
        _results[m.group(1)] = (report.passed, report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        passed, name = _results[num]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):02d}: {verdict}  ({name})")
