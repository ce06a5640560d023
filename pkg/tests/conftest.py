"""Shared fixtures plus a terminal summary that prints one line per
acceptance criterion."""

from __future__ import annotations

import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ewra.core import Event, EventType
from ewra.curate import load_gazetteer, sentence_from_record
from ewra.jsonl import read_jsonl

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def gazetteer():
    return load_gazetteer(FIXTURES / "gazetteer_200.tsv")


@pytest.fixture(scope="session")
def poland_event() -> Event:
    return Event(
        name="Poland Floods",
        event_type=EventType.FLOODS,
        country="Poland",
        event_date=date(2024, 8, 18),
    )


@pytest.fixture(scope="session")
def yagi_event() -> Event:
    return Event(
        name="Typhoon Yagi",
        event_type=EventType.WIND,
        country="Vietnam",
        event_date=date(2024, 9, 8),
    )


@pytest.fixture(scope="session")
def fixture_articles() -> list[dict]:
    return read_jsonl(FIXTURES / "articles_20.jsonl")


@pytest.fixture(scope="session")
def fifty_sentences():
    return [sentence_from_record(r) for r in read_jsonl(FIXTURES / "sentences_50.jsonl")]


def golden_response(name: str) -> str:
    return (FIXTURES / "golden" / f"{name}_response.txt").read_text(encoding="utf-8")


_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "acceptance" in report.keywords:
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = "PASS" if outcome == "passed" else "FAIL"
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{label}: {name}")
