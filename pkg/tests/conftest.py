"""Collects acceptance outcomes and prints one verdict line per criterion at the end of the run."""

import pytest

_OUTCOMES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = getattr(item, "acceptance_detail", "")
        if report.failed:
            crash = getattr(report.longrepr, "reprcrash", None)
            detail = detail or (crash.message.splitlines()[0] if crash else "")
        _OUTCOMES[cid] = (title, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_OUTCOMES, key=lambda c: (int(c.rstrip("abc")), c)):
        title, outcome, detail = _OUTCOMES[cid]
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"{verdict:4} [{cid}] {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))


@pytest.fixture
def record(request):
    """Attach a one-line measurement to the acceptance verdict of this test."""

    def _record(text):
        request.node.acceptance_detail = text

    return _record
