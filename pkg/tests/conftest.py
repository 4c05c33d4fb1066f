import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body sets ``rec['detail']`` as it goes."""
    name = request.node.name.removeprefix("test_")
    rec = ACCEPTANCE.setdefault(name, {"detail": ""})
    return rec


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "criterion" in item.fixturenames:
        name = item.name.removeprefix("test_")
        ACCEPTANCE.setdefault(name, {"detail": ""})
        ACCEPTANCE[name]["passed"] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        rec = ACCEPTANCE[name]
        status = "PASS" if rec.get("passed") else "FAIL"
        terminalreporter.write_line(f"{status}  {name}: {rec['detail']}")
