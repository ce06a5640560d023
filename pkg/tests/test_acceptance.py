"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line
in the terminal summary (see conftest)."""

from __future__ import annotations

import random
import time
from datetime import date, datetime, timedelta

import numpy as np
import pytest

from ewra.align import ParseError, generate, parse_output
from ewra.core import (
    DEFAULT_TAXONOMY,
    CategoryDistribution,
    Scope,
    TaskKind,
    Verdict,
    average_ranks,
    normalize_distribution,
    validate_distribution,
)
from ewra.curate import curate, segment_sentences
from ewra.curriculum import RegimeKind, SplitSpec, build_regime, emit_plan, split
from ewra.ingest import DEFAULT_KEYWORD_BANK, FeedFormatError, build_queries, parse_feed, within_window
from ewra.metrics import spearman
from ewra.prompts import PromptVariant

from conftest import golden_response
from mockserver import MockHTTPServer, make_multitask_chat_handler
from test_align import cfg_for
from test_curriculum import make_samples
from test_ingest import make_event

pytestmark = pytest.mark.acceptance


def oracle_ranks(values):
    ranks = []
    for v in values:
        greater = sum(1 for u in values if u > v)
        equal = sum(1 for u in values if u == v)
        ranks.append((2 * greater + equal + 1) / 2)
    return ranks


def test_metric_oracle_equivalence():
    """spearman vs an independent rank-then-Pearson brute force: 1,000
    random vectors, lengths 3..10, with injected ties, |delta| <= 1e-9,
    in under 5 seconds."""
    rng = random.Random(12345)
    started = time.monotonic()
    compared = 0
    while compared < 1000:
        n = rng.randint(3, 10)
        # coarse grid injects plenty of exact ties
        x = [rng.choice([0.0, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0]) for _ in range(n)]
        y = [rng.choice([0.0, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0]) for _ in range(n)]
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue  # degenerate pairs are handled by policy, not correlation
        ours = spearman(average_ranks(x), average_ranks(y))
        oracle = float(np.corrcoef(oracle_ranks(x), oracle_ranks(y))[0, 1])
        assert abs(ours - oracle) <= 1e-9, (x, y, ours, oracle)
        compared += 1
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"


def test_closed_form_check():
    """x=[1,2,3,4], y=[2,1,4,3]: sum(d^2)=4 so rho = 1-24/60 = 0.6 exactly."""
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == 0.6


def test_parser_golden_responses():
    """The three golden one-shot example responses parse to exactly the
    expected distributions and keywords."""
    vie = parse_output(golden_response("vie"), TaskKind.VIE)
    assert vie.distributions[0].entries == {
        "Vulnerability": 0.40, "Impact": 0.10, "Emergency": 0.50, "Others": 0.00,
    }

    emotion = parse_output(golden_response("emotion"), TaskKind.EMOTION)
    assert emotion.distributions[0].entries == {
        "Sadness": 0.8, "Anger": 0.05, "Fear": 0.05,
        "Joy": 0, "Optimism": 0, "Trust": 0, "Neutral": 0.1,
    }

    topic = parse_output(golden_response("topic"), TaskKind.TOPIC_LABEL)
    assert topic.distributions[0].entries == {"Impact": 0.8, "Emergency Response": 0.2}
    assert topic.distributions[1].entries == {
        "Homeless": 0.5, "Infrastructure Damage": 0.3, "Emergency Services": 0.2,
    }
    assert topic.keywords == ["devastation", "homeless", "power outage", "Hurricane Maria"]


def test_simplex_enforcement():
    """10,000 fuzzed distributions: every Valid verdict sums within 0.01 of
    1; every normalize output re-validates Valid; normalize is idempotent."""
    rng = random.Random(777)
    names = list(DEFAULT_TAXONOMY.vie_categories) + ["Bogus", "Made Up"]
    checked_valid = 0
    checked_repairable = 0
    for _ in range(10_000):
        k = rng.randint(0, 5)
        entries = {}
        for _ in range(k):
            name = rng.choice(names)
            entries[name] = rng.uniform(-0.3, 1.4)
        dist = CategoryDistribution(entries=entries, scope=Scope.VIE)
        verdict = validate_distribution(dist, DEFAULT_TAXONOMY)
        if verdict is Verdict.VALID:
            checked_valid += 1
            assert abs(dist.total() - 1.0) <= 0.01 + 1e-12
        elif verdict is Verdict.REPAIRABLE:
            checked_repairable += 1
            once = normalize_distribution(dist)
            assert validate_distribution(once, DEFAULT_TAXONOMY) is Verdict.VALID
            twice = normalize_distribution(once)
            for name in once.entries:
                assert abs(once.entries[name] - twice.entries[name]) <= 1e-12
    # the fuzz must actually have exercised both bands
    assert checked_valid > 0 and checked_repairable > 0


def test_curation_conservation(fixture_articles, gazetteer, poland_event):
    """On the 20-article fixture corpus: counts reconcile exactly, every kept
    sentence is in [30, 200] chars with >= 1 gazetteer hit, and the
    29/30/200/201 boundary sentences behave per the length rule."""
    sentences, report = curate(fixture_articles, gazetteer, poland_event)
    assert report.articles_in == 20
    assert (
        report.kept + report.dropped_short + report.dropped_long
        + report.dropped_no_location == report.segmented
    )
    assert report.kept == len(sentences)
    for sentence in sentences:
        assert 30 <= len(sentence.text) <= 200
        assert len(sentence.matched_locations) >= 1

    segmented = [
        text
        for article in fixture_articles
        for text in segment_sentences(article.get("body") or "")
    ]
    kept_texts = {s.text for s in sentences}
    by_length = {
        29: [t for t in segmented if len(t) == 29],
        30: [t for t in segmented if len(t) == 30],
        200: [t for t in segmented if len(t) == 200],
        201: [t for t in segmented if len(t) == 201],
    }
    for length in (29, 30, 200, 201):
        assert by_length[length], f"fixture lacks a {length}-char sentence"
    assert all(t not in kept_texts for t in by_length[29])
    assert all(t not in kept_texts for t in by_length[201])
    assert any(t in kept_texts for t in by_length[30])
    assert any(t in kept_texts for t in by_length[200])


def test_end_to_end_mock_generation(fifty_sentences):
    """50 fixture sentences x 3 tasks against the scripted mock server:
    150 validated samples clean; with ~10% injected malformed responses,
    samples + quarantine = inputs and retries appear in the request log."""
    tasks = (TaskKind.VIE, TaskKind.TOPIC_LABEL, TaskKind.EMOTION)

    # clean phase: everything validates
    with MockHTTPServer(make_multitask_chat_handler()) as server:
        total = 0
        for task in tasks:
            result = generate(
                fifty_sentences, task, PromptVariant.EXPLICIT, cfg_for(server.url)
            )
            assert not result.quarantined
            for sample in result.samples:
                for dist in sample.output.distributions:
                    assert validate_distribution(dist, DEFAULT_TAXONOMY) is Verdict.VALID
            total += len(result.samples)
        assert total == 150

    # malformed phase: 5 of 50 sentences (10%) always malformed
    marked = {s.text for s in fifty_sentences[::10]}
    assert len(marked) == 5

    def is_marked(prompt: str) -> bool:
        return any(m in prompt for m in marked)

    with MockHTTPServer(make_multitask_chat_handler(malformed_when=is_marked)) as server:
        for task in tasks:
            result = generate(
                fifty_sentences, task, PromptVariant.EXPLICIT, cfg_for(server.url)
            )
            assert len(result.samples) + len(result.quarantined) == len(fifty_sentences)
            assert len(result.quarantined) == 5
            assert all(q.attempts == 3 for q in result.quarantined)
        prompts = server.prompts_seen()
        for sentence in marked:
            per_task = [p for p in prompts if sentence in p]
            # three tasks x three attempts each
            assert len(per_task) == 9


def test_curriculum_contracts(tmp_path):
    """EWRA stages [implicit x1, explicit x1], ReverseEWRA reversed, all
    regimes total 2 epochs; DirectSFT targets carry no <think>; splits on
    n=1,000 are 700/150/150, deterministic under seed 3407, leakage-free."""
    paired = make_samples(500, variants=("explicit", "implicit"))
    assert len(paired) == 1000

    spec = SplitSpec(seed=3407)
    train, val, test = split(paired, spec)
    assert (len(train), len(val), len(test)) == (700, 150, 150)
    again = split(paired, SplitSpec(seed=3407))
    assert (train, val, test) == again
    sentence_sets = [{s["sentence"] for s in part} for part in (train, val, test)]
    assert not (sentence_sets[0] & sentence_sets[1])
    assert not (sentence_sets[0] & sentence_sets[2])
    assert not (sentence_sets[1] & sentence_sets[2])

    ewra_plan = emit_plan(
        RegimeKind.EWRA, build_regime(train, RegimeKind.EWRA), tmp_path / "ewra"
    )
    assert [(s.label, s.epochs) for s in ewra_plan.stages] == [
        ("implicit", 1), ("explicit", 1),
    ]
    reverse_plan = emit_plan(
        RegimeKind.REVERSE_EWRA,
        build_regime(train, RegimeKind.REVERSE_EWRA),
        tmp_path / "reverse",
    )
    assert [(s.label, s.epochs) for s in reverse_plan.stages] == [
        ("explicit", 1), ("implicit", 1),
    ]

    for kind in RegimeKind:
        plan = emit_plan(kind, build_regime(train, kind), tmp_path / kind.value)
        assert plan.total_epochs == 2

    direct_records = build_regime(train, RegimeKind.DIRECT_SFT)
    assert direct_records
    for record in direct_records:
        assert "<think>" not in record.target


def test_ingest_windowing_and_query():
    """Items dated +/-31 days pass and +/-40 days fail; the query builder
    reproduces the worked Typhoon Yagi example verbatim."""
    event_day = date(2024, 9, 8)
    for offset in (31, -31, 0, 12):
        published = datetime(2024, 9, 8) + timedelta(days=offset)
        assert within_window(published, event_day, 31)
    for offset in (40, -40):
        published = datetime(2024, 9, 8) + timedelta(days=offset)
        assert not within_window(published, event_day, 31)

    queries = build_queries(make_event(), DEFAULT_KEYWORD_BANK)
    assert "Typhoon Yagi Vietnam resilience weather" in queries


def test_fuzz_safety_parsers():
    """Neither the feed parser nor the output parser ever escapes its
    documented error types on arbitrary bytes (10^4 cases each)."""
    rng = random.Random(2024)
    goldens = [golden_response(n) for n in ("vie", "emotion", "topic")]

    def random_blob() -> bytes:
        return bytes(rng.randrange(256) for _ in range(rng.randrange(0, 400)))

    def mutated_golden() -> bytes:
        text = bytearray(rng.choice(goldens).encode("utf-8"))
        for _ in range(rng.randrange(1, 30)):
            if not text:
                break
            text[rng.randrange(len(text))] = rng.randrange(256)
        return bytes(text)

    for i in range(10_000):
        blob = random_blob() if i % 3 else mutated_golden()
        try:
            parse_output(blob.decode("latin-1"), TaskKind.TOPIC_LABEL)
        except ParseError:
            pass

    for i in range(10_000):
        blob = random_blob() if i % 3 else mutated_golden()
        try:
            items, skipped = parse_feed(blob)
            assert isinstance(items, list) and skipped >= 0
        except FeedFormatError:
            pass
