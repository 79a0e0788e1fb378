import pytest

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if report.skipped:
        _ACCEPTANCE[number] = (title, "SKIP", str(report.longrepr[-1]) if report.longrepr else "")
    elif report.failed:
        _ACCEPTANCE[number] = (title, "FAIL", detail)
    elif report.when == "call":
        _ACCEPTANCE[number] = (title, "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict, detail = _ACCEPTANCE[number]
        line = f"criterion {number} [{verdict}] {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
