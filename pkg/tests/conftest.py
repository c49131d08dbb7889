import json
from importlib import resources

import pytest
from hypothesis import settings

from tcintent.benchmark import default_semantic_model
from tcintent.profile import default_profile

# JIT compilation on first call makes wall-clock deadlines meaningless.
settings.register_profile("tcintent", deadline=None)
settings.load_profile("tcintent")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    item_marker = getattr(report, "_criterion", None)
    if item_marker is None:
        return
    number, title = item_marker
    entry = _CRITERIA.setdefault(number, {"title": title, "outcomes": []})
    if report.when == "call" or report.outcome != "passed":
        entry["outcomes"].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif outcomes and all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")


@pytest.fixture(scope="session")
def voice_model():
    return default_semantic_model()


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def casestudy():
    d = resources.files("tcintent.data").joinpath("casestudy")
    return {name: d.joinpath(name).read_text(encoding="utf-8")
            for name in ("voice_intent.txt", "raw_subintents.txt", "raw_config.tc", "corrected_subintents.txt",
                         "corrected_config.tc")}


def load_json_asset(name):
    return json.loads(resources.files("tcintent.data").joinpath(name).read_text(encoding="utf-8"))
