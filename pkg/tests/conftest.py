"""Per-criterion summary lines for the acceptance suite."""

import pytest

_NOTES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title, gating=True): acceptance criterion")


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the current acceptance test."""

    def put(text: str) -> None:
        _NOTES[request.node.nodeid] = text

    return put


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = (mark.args[0], mark.args[1], mark.kwargs.get("gating", True))


def pytest_terminal_summary(terminalreporter):
    seen = {}
    for reports in terminalreporter.stats.values():
        for rep in reports:
            crit = getattr(rep, "criterion", None)
            if crit is None:
                continue
            # a failure in setup or teardown overrides the call outcome
            if rep.when == "call" or rep.outcome != "passed":
                prev = seen.get(rep.nodeid)
                if prev is None or prev[1] == "passed":
                    seen[rep.nodeid] = (crit, rep.outcome)
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(seen.items(), key=lambda kv: _sort_label(kv[1][0][0]))
    for nodeid, ((label, title, gating), outcome) in order:
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        if not gating and outcome == "passed":
            status = "REPORT"
        detail = _NOTES.get(nodeid, "")
        terminalreporter.write_line(f"[{status:6s}] criterion {label:>3s}: {title}" + (f" | {detail}" if detail else ""))


def _sort_label(label: str):
    return (0, int(label), "") if label.isdigit() else (1, 0, label)
