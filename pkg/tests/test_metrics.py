"""Spearman/Jaccard metrics against an independent brute-force oracle, plus
evaluation aggregation and the embedding-cosine substitute."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ewra.core import CategoryDistribution, Scope, TaskKind, average_ranks
from ewra.metrics import (
    EmbeddingClient,
    EmbeddingConfig,
    EvalRecord,
    EvaluationError,
    MetricUnavailable,
    evaluate,
    is_degenerate,
    jaccard,
    similarity_substitute,
    spearman,
    spearman_from_distributions,
    tokenize_for_overlap,
)

from mockserver import MockHTTPServer, make_embedding_handler


# --- independent oracle: brute-force average ranks + numpy Pearson ---------

def oracle_ranks(values):
    """Rank by counting pairwise comparisons (1 = largest, ties averaged)."""
    ranks = []
    for v in values:
        greater = sum(1 for u in values if u > v)
        equal = sum(1 for u in values if u == v)
        ranks.append((2 * greater + equal + 1) / 2)
    return ranks


def oracle_spearman(x_scores, y_scores):
    rx = np.asarray(oracle_ranks(x_scores), dtype=float)
    ry = np.asarray(oracle_ranks(y_scores), dtype=float)
    return float(np.corrcoef(rx, ry)[0, 1])


class TestSpearman:
    def test_identical_rankings(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0

    def test_full_reversal(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_closed_form_example_exact(self):
        # sum(d^2) = 4 -> 1 - 6*4/(4*15) = 0.6
        assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == 0.6

    def test_length_mismatch_errors(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2, 3])

    def test_short_vectors_error(self):
        with pytest.raises(ValueError):
            spearman([1], [1])

    def test_zero_variance_scores_zero(self):
        assert spearman([2, 2, 2], [1, 2, 3]) == 0.0

    def test_matches_oracle_with_ties(self):
        rng = random.Random(7)
        for _ in range(300):
            n = rng.randint(3, 10)
            x = [rng.choice([0.0, 0.1, 0.25, 0.5, 1.0]) for _ in range(n)]
            y = [rng.choice([0.0, 0.1, 0.25, 0.5, 1.0]) for _ in range(n)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            ours = spearman(average_ranks(x), average_ranks(y))
            assert abs(ours - oracle_spearman(x, y)) <= 1e-9


@st.composite
def permutation_pairs(draw):
    n = draw(st.integers(min_value=2, max_value=30))
    seed = draw(st.integers(min_value=0, max_value=2**31))
    rng = random.Random(seed)
    x = list(range(1, n + 1))
    y = list(x)
    rng.shuffle(x)
    rng.shuffle(y)
    return x, y


class TestSpearmanProperties:
    @given(permutation_pairs())
    def test_equals_closed_form_on_tie_free_permutations(self, pair):
        x, y = pair
        n = len(x)
        d2 = sum((a - b) ** 2 for a, b in zip(x, y))
        closed = 1 - 6 * d2 / (n * (n * n - 1))
        assert abs(spearman(x, y) - closed) <= 1e-12

    @given(permutation_pairs())
    def test_symmetry(self, pair):
        x, y = pair
        assert spearman(x, y) == spearman(y, x)

    @given(permutation_pairs())
    def test_self_correlation_is_one(self, pair):
        x, _ = pair
        assert math.isclose(spearman(x, x), 1.0)


REF_DIST = {"Vulnerability": 0.40, "Impact": 0.10, "Emergency": 0.50, "Others": 0.00}


def vie_dist(entries):
    return CategoryDistribution(entries=dict(entries), scope=Scope.VIE)


class TestSpearmanFromDistributions:
    def test_identical_distributions(self):
        assert spearman_from_distributions(vie_dist(REF_DIST), vie_dist(REF_DIST)) == 1.0

    def test_uniform_prediction_is_degenerate_zero(self):
        uniform = vie_dist({k: 0.25 for k in REF_DIST})
        assert spearman_from_distributions(uniform, vie_dist(REF_DIST)) == 0.0

    def test_oracle_value_on_distinct_rankings(self):
        # ranks [1,2,3,4] vs [2,3,1,4]: d^2 sums to 6 -> 1 - 36/60 = 0.4
        # (frozen from the brute-force oracle below)
        pred = vie_dist({"Vulnerability": 0.5, "Impact": 0.3, "Emergency": 0.2, "Others": 0})
        gold = vie_dist(REF_DIST)
        expected = oracle_spearman([0.5, 0.3, 0.2, 0.0], [0.40, 0.10, 0.50, 0.00])
        assert math.isclose(expected, 0.4, abs_tol=1e-12)
        assert math.isclose(spearman_from_distributions(pred, gold), 0.4, abs_tol=1e-12)

    def test_missing_categories_fill_as_zero(self):
        pred = vie_dist({"Vulnerability": 0.6, "Impact": 0.4})
        gold = vie_dist(REF_DIST)
        full_pred = vie_dist({"Vulnerability": 0.6, "Impact": 0.4, "Emergency": 0, "Others": 0})
        assert spearman_from_distributions(pred, gold) == spearman_from_distributions(
            full_pred, gold
        )

    def test_scope_mismatch_errors(self):
        topic = CategoryDistribution(entries={"Impact": 1.0}, scope=Scope.TOPIC)
        with pytest.raises(EvaluationError):
            spearman_from_distributions(vie_dist(REF_DIST), topic)

    @given(st.sampled_from([0.5, 2.0, 7.5]))
    def test_invariant_under_positive_scaling(self, factor):
        pred = vie_dist({"Vulnerability": 0.5, "Impact": 0.3, "Emergency": 0.2, "Others": 0})
        scaled = vie_dist({k: v * factor for k, v in pred.entries.items()})
        gold = vie_dist(REF_DIST)
        assert spearman_from_distributions(pred, gold) == spearman_from_distributions(
            scaled, gold
        )


class TestJaccard:
    def test_half_overlap(self):
        # 2 common / 4 in the union
        assert jaccard({"flood", "damage", "rescue"}, {"flood", "rescue", "aid"}) == 0.5

    def test_identical_sets(self):
        assert jaccard({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint_sets(self):
        assert jaccard({"a"}, {"b"}) == 0.0

    def test_both_empty(self):
        assert jaccard(set(), set()) == 1.0

    @given(st.sets(st.text(max_size=4)), st.sets(st.text(max_size=4)))
    def test_symmetric_and_bounded(self, a, b):
        score = jaccard(a, b)
        assert score == jaccard(b, a)
        assert 0.0 <= score <= 1.0
        assert jaccard(a, a) == 1.0


class TestTokenize:
    def test_lowercase_and_dedupe(self):
        assert tokenize_for_overlap("Flood damage, flood RESCUE") == {"flood", "damage", "rescue"}

    def test_empty(self):
        assert tokenize_for_overlap("") == set()

    def test_hyphen_splits(self):
        assert tokenize_for_overlap("A-B") == {"a", "b"}


class TestSimilaritySubstitute:
    def test_self_similarity_is_one(self):
        with MockHTTPServer(make_embedding_handler()) as server:
            client = EmbeddingClient(EmbeddingConfig(endpoint=server.url))
            assert abs(similarity_substitute("same text", "same text", client) - 1.0) <= 1e-6

    def test_orthogonal_vectors_map_to_half(self):
        def vec(text):
            return [1.0, 0.0] if text == "cand" else [0.0, 1.0]

        with MockHTTPServer(make_embedding_handler(vector_for=vec)) as server:
            client = EmbeddingClient(EmbeddingConfig(endpoint=server.url))
            assert abs(similarity_substitute("cand", "ref", client) - 0.5) <= 1e-9

    def test_endpoint_down_raises_metric_unavailable(self):
        client = EmbeddingClient(
            EmbeddingConfig(endpoint="http://127.0.0.1:1", timeout=0.2)
        )
        with pytest.raises(MetricUnavailable):
            similarity_substitute("a", "b", client)


def _record(id_, entries, explanation="flood damage in town", keywords=None, scope=Scope.VIE):
    return EvalRecord(
        id=id_,
        distributions={scope: CategoryDistribution(entries=dict(entries), scope=scope)},
        keywords=keywords,
        explanation=explanation,
    )


class TestEvaluate:
    def test_perfect_predictions(self):
        golds = [_record(f"s{i}", REF_DIST) for i in range(5)]
        preds = [_record(f"s{i}", REF_DIST) for i in range(5)]
        report = evaluate(preds, golds, TaskKind.VIE)
        assert report.src_mean == 1.0
        assert report.jaccard_mean == 1.0
        assert report.n_evaluated == 5 and report.n_skipped == 0
        assert report.src_pair is None

    def test_degenerate_sample_counted_and_scored_zero(self):
        golds = [_record(f"s{i}", REF_DIST) for i in range(10)]
        preds = [_record(f"s{i}", REF_DIST) for i in range(9)]
        preds.append(_record("s9", {k: 0.25 for k in REF_DIST}))
        report = evaluate(preds, golds, TaskKind.VIE)
        assert report.n_skipped == 1
        assert report.n_evaluated == 9
        assert math.isclose(report.src_mean, 9 / 10)

    def test_degenerate_exclusion_flag(self):
        golds = [_record(f"s{i}", REF_DIST) for i in range(10)]
        preds = [_record(f"s{i}", REF_DIST) for i in range(9)]
        preds.append(_record("s9", {k: 0.25 for k in REF_DIST}))
        report = evaluate(preds, golds, TaskKind.VIE, include_degenerate=False)
        assert math.isclose(report.src_mean, 1.0)

    def test_topic_report_carries_src_pair(self):
        def topic_record(id_):
            return EvalRecord(
                id=id_,
                distributions={
                    Scope.TOPIC: CategoryDistribution(
                        entries={"Impact": 0.8, "Emergency Response": 0.2}, scope=Scope.TOPIC
                    ),
                    Scope.SUBTOPIC: CategoryDistribution(
                        entries={"Homeless": 0.5, "Infrastructure Damage": 0.3,
                                 "Emergency Services": 0.2},
                        scope=Scope.SUBTOPIC,
                    ),
                },
                keywords=["devastation", "homeless"],
                explanation="homes destroyed",
            )

        report = evaluate([topic_record("t0")], [topic_record("t0")], TaskKind.TOPIC_LABEL)
        assert report.src_pair == (1.0, 1.0)
        assert report.keyword_jaccard_mean == 1.0
        assert "/" in report.to_dict()["src_pair"]

    def test_id_mismatch_errors_with_ids(self):
        golds = [_record("gold-only", REF_DIST)]
        preds = [_record("pred-only", REF_DIST)]
        with pytest.raises(EvaluationError, match="pred-only"):
            evaluate(preds, golds, TaskKind.VIE)

    def test_similarity_unavailable_degrades(self):
        golds = [_record("s0", REF_DIST)]
        preds = [_record("s0", REF_DIST)]
        client = EmbeddingClient(EmbeddingConfig(endpoint="http://127.0.0.1:1", timeout=0.2))
        report = evaluate(preds, golds, TaskKind.VIE, embed_client=client)
        assert report.similarity_mean is None
        assert report.src_mean == 1.0

    def test_similarity_mean_present_with_endpoint(self):
        with MockHTTPServer(make_embedding_handler()) as server:
            client = EmbeddingClient(EmbeddingConfig(endpoint=server.url))
            golds = [_record("s0", REF_DIST)]
            preds = [_record("s0", REF_DIST)]
            report = evaluate(preds, golds, TaskKind.VIE, embed_client=client)
        assert report.similarity_mean is not None
        assert abs(report.similarity_mean - 1.0) <= 1e-6

    def test_means_recomputable_from_per_sample_dump(self):
        rng = random.Random(3)
        golds, preds = [], []
        for i in range(8):
            golds.append(_record(f"s{i}", REF_DIST, explanation=f"gold text {i}"))
            shuffled = dict(zip(REF_DIST, rng.sample(list(REF_DIST.values()), 4)))
            preds.append(_record(f"s{i}", shuffled, explanation=f"pred text {i}"))
        report = evaluate(preds, golds, TaskKind.VIE)
        assert math.isclose(
            report.src_mean, sum(r["src"] for r in report.per_sample) / 8
        )
        assert math.isclose(
            report.jaccard_mean, sum(r["jaccard"] for r in report.per_sample) / 8
        )


def test_is_degenerate():
    assert is_degenerate([2.5, 2.5, 2.5])
    assert not is_degenerate([1.0, 2.0])
