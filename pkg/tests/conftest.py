import pytest

_CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="also run the long reference configurations (about an hour each)")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="long-running; enable with --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = (mark.args[0], mark.args[1])
    entry = _CRITERIA.setdefault(key, [])
    if report.when == "call":
        entry.append("skipped" if report.skipped else report.outcome)
    elif report.when == "setup" and report.outcome != "passed":
        entry.append("skipped" if report.skipped else "failed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcomes in sorted(_CRITERIA.items(), key=lambda kv: str(kv[0][0]).zfill(3)):
        if any(o == "failed" for o in outcomes):
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {number:>3}  {verdict}  {title}")
