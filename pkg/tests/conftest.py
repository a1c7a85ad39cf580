import re

import numpy as np
import pytest

_CRITERIA = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    if report.when == "call" or report.failed:
        prev = _CRITERIA.get(key)
        if prev is None or prev[0]:
            _CRITERIA[key] = (report.passed, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (ok, dur) in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name:<36s} {'PASS' if ok else 'FAIL'}  ({dur:.1f} s)")
