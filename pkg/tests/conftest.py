import re
from collections import OrderedDict

_CRITERIA: "OrderedDict[int, list[tuple[str, str]]]" = OrderedDict()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_c(\d+)_", report.nodeid)
    if m:
        outcome = "xfail" if hasattr(report, "wasxfail") and report.skipped else report.outcome
        _CRITERIA.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1], outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        parts = _CRITERIA[k]
        ok = all(outcome == "passed" for _, outcome in parts)
        failed = [name for name, outcome in parts if outcome not in ("passed", "xfail")]
        known = [name for name, outcome in parts if outcome == "xfail"]
        tail = ""
        if failed:
            tail += "  failed: " + ", ".join(failed)
        if known:
            tail += "  unattainable as stated (strict xfail): " + ", ".join(known)
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}{tail}")
