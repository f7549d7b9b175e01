import re

_RESULTS = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _RESULTS.append((report.nodeid, report.outcome))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _RESULTS.append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _RESULTS:
        name = nodeid.split("::")[-1]
        m = re.match(r"test_ac(\d+)_(.*)", name)
        label = f"AC{int(m.group(1)):>2} {m.group(2)}" if m else name
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")
