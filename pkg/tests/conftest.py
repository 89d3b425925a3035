from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "approxlab",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("approxlab")

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    entry = _CRITERIA.setdefault(number, {"text": text, "ok": True, "ran": False})
    if rep.when == "call":
        entry["ran"] = True
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {entry['text']}")
