import pytest

TITLES = {
    1: "symbolic certification N=3..8",
    2: "beam-splitter equivalence N=3,4",
    3: "quartic operator contract",
    4: "cubic gate squeezing sweep",
    5: "quartic gate squeezing sweep",
    6: "ancilla variance law",
    7: "nonlinear-squeezing A/B test",
    8: "Gaussian oracle agreement",
    9: "determinism",
}

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.outcome == "passed" and not hasattr(rep, "wasxfail")
        _results.setdefault(mark.args[0], []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(TITLES):
        if n not in _results:
            continue
        parts = _results[n]
        ok = all(p for _, p in parts)
        failed = [name for name, p in parts if not p]
        line = f"criterion {n} ({TITLES[n]}): {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  [failing: " + ", ".join(failed) + "]"
        terminalreporter.write_line(line)
