from __future__ import annotations

from pathlib import Path

import pytest

from faaf import desk_dataset_path
from faaf.core import AnswerKind, QARecord, make_facts
from faaf.dataset import load_dataset
from faaf.gateway import BackendDescriptor, BackendKind, Gateway, ResponseCache, make_backend

FIXTURES = Path(__file__).parent / "fixtures"

POPE_FACT = (
    "Pope Benedict XVI became the head of the Catholic Church and sovereign of the Vatican City State "
    "on April 19, 2005."
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def desk():
    return load_dataset(desk_dataset_path())


@pytest.fixture
def small_record() -> QARecord:
    facts = make_facts(["The bridge is red.", "The bridge opened in 1932.", "The bridge spans the bay."])
    labels = {}
    for i, (ung, poor) in enumerate([(True, False), (False, False), (True, True)]):
        labels[(AnswerKind.GROUND_TRUTH, i)] = True
        labels[(AnswerKind.UNGROUNDED, i)] = ung
        labels[(AnswerKind.POOR, i)] = poor
    return QARecord(
        "bridge",
        "What do we know about the bridge?",
        {
            AnswerKind.GROUND_TRUTH: "The bridge is red. The bridge opened in 1932. The bridge spans the bay.",
            AnswerKind.UNGROUNDED: "The bridge is red. It opened in 1950. The bridge spans the bay.",
            AnswerKind.POOR: "A bridge. The bridge spans the bay.",
        },
        facts,
        labels,
    )


@pytest.fixture
def oracle_gateway_factory(tmp_path):
    def make(records, *, dialect=None, cache: bool = True, **kwargs) -> Gateway:
        descriptor = BackendDescriptor(BackendKind.MOCK_ORACLE, dialect=dialect)
        backend = make_backend(descriptor, records=records)
        return Gateway(backend, cache=ResponseCache(tmp_path / "cache") if cache else None, **kwargs)

    return make


# --- acceptance summary ------------------------------------------------------

_CRITERIA: dict[str, tuple[str, str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2].removeprefix("Skipped: ")
        _CRITERIA[item.nodeid] = (str(number), title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_CRITERIA.values(), key=lambda c: (int(c[0].rstrip("ab")), c[0])):
        line = f"[{status}] criterion {number}: {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
