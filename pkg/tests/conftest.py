import pytest

from fframes.cli import PRESETS, preset_config, report_json, run

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when == "teardown" and rep.passed):
        return
    number, title = mark.args
    ok = rep.passed
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")


def _strip_time(text):
    return "\n".join(line for line in text.splitlines() if '"wall_time_s"' not in line)


@pytest.fixture(scope="session")
def preset_runs():
    """Each preset run twice: name -> (report, first json, second json), wall time removed."""
    out = {}
    for name in PRESETS:
        first = run(preset_config(name))
        second = run(preset_config(name))
        out[name] = (first, _strip_time(report_json(first)), _strip_time(report_json(second)))
    return out
