import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        _results[marker.kwargs["number"]] = (marker.kwargs["title"], report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, outcome, detail = _results[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  [{number:2d}] {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
