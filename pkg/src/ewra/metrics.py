"""Ranking-based evaluation: tie-aware Spearman rank correlation, Jaccard
overlap, per-task aggregation, and an optional embedding-cosine similarity
(a labeled substitute, not BERTScore).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import requests

from .core import (
    CategoryDistribution,
    DEFAULT_TAXONOMY,
    EwraError,
    Scope,
    TaskKind,
    Taxonomy,
    fill_missing,
    ranks_from_distribution,
    scopes_for_task,
)


class EvaluationError(EwraError):
    """Raised on structural problems with prediction/gold inputs."""


class MetricUnavailable(EwraError):
    """The similarity endpoint cannot be reached; the metric is dropped."""


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho for two rank vectors.

    Computed as the Pearson correlation of the rank vectors, which handles
    average-rank ties; for tie-free permutations this equals the closed form
    1 - 6*sum(d^2)/(n*(n^2-1)). A zero-variance vector yields 0.0 (callers
    track such degenerate pairs separately).
    """
    if len(x) != len(y):
        raise ValueError(f"rank vectors differ in length: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("rank vectors need at least 2 entries")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    sxy = math.fsum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    sxx = math.fsum((a - mean_x) ** 2 for a in x)
    syy = math.fsum((b - mean_y) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def is_degenerate(ranks: Sequence[float]) -> bool:
    """True when every rank is identical (a constant vector)."""
    return len(set(ranks)) <= 1


def spearman_from_distributions(
    pred: CategoryDistribution,
    gold: CategoryDistribution,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
) -> float:
    """Rank both distributions over the full category set and correlate.

    Missing categories are filled with probability 0 first. Raises on scope
    mismatch.
    """
    if pred.scope is not gold.scope:
        raise EvaluationError(
            f"scope mismatch: {pred.scope.value} vs {gold.scope.value}"
        )
    pred_ranks = ranks_from_distribution(fill_missing(pred, taxonomy))
    gold_ranks = ranks_from_distribution(fill_missing(gold, taxonomy))
    if is_degenerate(pred_ranks) or is_degenerate(gold_ranks):
        return 0.0
    return spearman(pred_ranks, gold_ranks)


def jaccard(a: set, b: set) -> float:
    """Intersection over union; two empty sets count as identical (1.0)."""
    if not a and not b:
        return 1.0
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


_TOKEN_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def tokenize_for_overlap(text: str) -> set[str]:
    """Lowercase, split on non-alphanumeric runs, drop empties."""
    return {tok for tok in _TOKEN_SPLIT_RE.split(text.lower()) if tok}


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = math.fsum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(math.fsum(x * x for x in a))
    norm_b = math.sqrt(math.fsum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


@dataclass
class EmbeddingConfig:
    endpoint: str
    model: str = "default"
    api_key: Optional[str] = None
    timeout: float = 30.0


class EmbeddingClient:
    """Client for an embeddings endpoint speaking the common JSON shape
    (request {model, input: [...]}; response data[i].embedding)."""

    def __init__(self, cfg: EmbeddingConfig, session: Optional[requests.Session] = None):
        self.cfg = cfg
        self.session = session or requests.Session()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        headers = {}
        if self.cfg.api_key:
            headers["Authorization"] = f"Bearer {self.cfg.api_key}"
        try:
            response = self.session.post(
                self.cfg.endpoint,
                json={"model": self.cfg.model, "input": list(texts)},
                headers=headers,
                timeout=self.cfg.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise MetricUnavailable(f"embedding endpoint unreachable: {exc}") from exc
        if not response.ok:
            raise MetricUnavailable(
                f"embedding endpoint returned HTTP {response.status_code}"
            )
        try:
            data = response.json()["data"]
            data = sorted(data, key=lambda item: item.get("index", 0))
            vectors = [list(map(float, item["embedding"])) for item in data]
        except (ValueError, LookupError, TypeError) as exc:
            raise MetricUnavailable(f"malformed embedding body: {exc}") from exc
        if len(vectors) != len(texts):
            raise MetricUnavailable(
                f"embedding endpoint returned {len(vectors)} vectors for "
                f"{len(texts)} inputs"
            )
        return vectors


def similarity_substitute(
    cand: str, ref: str, client: EmbeddingClient
) -> float:
    """Whole-text embedding cosine mapped onto [0, 1] via (cos + 1) / 2.

    This is NOT BERTScore (no token-level contextual matching); reports must
    label it "embedding cosine (substitute)".
    """
    vec_cand, vec_ref = client.embed([cand, ref])
    score = (cosine(vec_cand, vec_ref) + 1.0) / 2.0
    return min(1.0, max(0.0, score))


@dataclass
class EvalRecord:
    """One prediction or gold annotation, keyed by sample id."""

    id: str
    distributions: dict[Scope, CategoryDistribution]
    keywords: Optional[list[str]]
    explanation: str

    @classmethod
    def from_record(cls, record: dict, where: str = "record") -> "EvalRecord":
        if "id" not in record:
            raise EvaluationError(f"{where}: missing 'id'")
        raw_dists = record.get("distributions")
        if not isinstance(raw_dists, dict) or not raw_dists:
            raise EvaluationError(f"{where}: missing or empty 'distributions'")
        dists: dict[Scope, CategoryDistribution] = {}
        for scope_name, entries in raw_dists.items():
            try:
                scope = Scope(scope_name)
            except ValueError as exc:
                raise EvaluationError(
                    f"{where}: unknown distribution scope {scope_name!r}"
                ) from exc
            dists[scope] = CategoryDistribution(
                entries={str(k): float(v) for k, v in entries.items()}, scope=scope
            )
        keywords = record.get("keywords")
        if keywords is not None:
            keywords = [str(k) for k in keywords]
        explanation = record.get("explanation", record.get("think", "")) or ""
        return cls(
            id=str(record["id"]),
            distributions=dists,
            keywords=keywords,
            explanation=explanation,
        )


@dataclass
class TaskReport:
    """Aggregated metrics for one task over a prediction/gold pairing."""

    task: TaskKind
    src_mean: float
    src_pair: Optional[tuple[float, float]]
    jaccard_mean: float
    keyword_jaccard_mean: Optional[float]
    similarity_mean: Optional[float]
    n_evaluated: int
    n_skipped: int
    per_sample: list[dict]

    def to_dict(self) -> dict:
        out = {
            "task": self.task.value,
            "src_mean": self.src_mean,
            "jaccard_mean": self.jaccard_mean,
            "n_evaluated": self.n_evaluated,
            "n_skipped": self.n_skipped,
            "similarity_metric": "embedding cosine (substitute)",
        }
        if self.src_pair is not None:
            out["src_topic_mean"] = self.src_pair[0]
            out["src_subtopic_mean"] = self.src_pair[1]
            out["src_pair"] = f"{self.src_pair[0]:.4f}/{self.src_pair[1]:.4f}"
        if self.keyword_jaccard_mean is not None:
            out["keyword_jaccard_mean"] = self.keyword_jaccard_mean
        if self.similarity_mean is not None:
            out["similarity_mean"] = self.similarity_mean
        return out


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def evaluate(
    preds: Sequence[EvalRecord],
    golds: Sequence[EvalRecord],
    task: TaskKind,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    embed_client: Optional[EmbeddingClient] = None,
    include_degenerate: bool = True,
) -> TaskReport:
    """Score predictions against gold annotations for one task.

    Rank correlation is computed per scope (topic and subtopic separately
    for the topic task); Jaccard compares explanation token sets, plus
    keyword token sets for the topic task. A sample whose rank vectors are
    constant on either side is counted skipped-degenerate; its rho of 0
    still enters the mean unless include_degenerate=False.
    """
    gold_by_id = {g.id: g for g in golds}
    pred_ids = [p.id for p in preds]
    missing = [pid for pid in pred_ids if pid not in gold_by_id]
    extra = [g.id for g in golds if g.id not in set(pred_ids)]
    if missing or extra:
        raise EvaluationError(
            f"id mismatch: predictions without gold {missing[:10]}, "
            f"gold without predictions {extra[:10]}"
        )
    if len(pred_ids) != len(set(pred_ids)):
        raise EvaluationError("duplicate prediction ids")

    scopes = scopes_for_task(task)
    per_sample: list[dict] = []
    src_by_scope: dict[Scope, list[float]] = {scope: [] for scope in scopes}
    jaccards: list[float] = []
    keyword_jaccards: list[float] = []
    similarities: list[float] = []
    degenerate_flags: list[bool] = []
    similarity_available = embed_client is not None

    for pred in preds:
        gold = gold_by_id[pred.id]
        row: dict = {"id": pred.id}
        degenerate = False
        for scope in scopes:
            pred_dist = pred.distributions.get(scope)
            gold_dist = gold.distributions.get(scope)
            if pred_dist is None or gold_dist is None:
                raise EvaluationError(
                    f"sample {pred.id}: missing {scope.value} distribution"
                )
            pred_ranks = ranks_from_distribution(fill_missing(pred_dist, taxonomy))
            gold_ranks = ranks_from_distribution(fill_missing(gold_dist, taxonomy))
            if is_degenerate(pred_ranks) or is_degenerate(gold_ranks):
                rho = 0.0
                degenerate = True
            else:
                rho = spearman(pred_ranks, gold_ranks)
            src_by_scope[scope].append(rho)
            key = "src" if len(scopes) == 1 else f"src_{scope.value}"
            row[key] = rho

        sample_jaccard = jaccard(
            tokenize_for_overlap(pred.explanation),
            tokenize_for_overlap(gold.explanation),
        )
        jaccards.append(sample_jaccard)
        row["jaccard"] = sample_jaccard

        if task is TaskKind.TOPIC_LABEL:
            kw_jaccard = jaccard(
                tokenize_for_overlap(", ".join(pred.keywords or [])),
                tokenize_for_overlap(", ".join(gold.keywords or [])),
            )
            keyword_jaccards.append(kw_jaccard)
            row["keyword_jaccard"] = kw_jaccard

        if similarity_available:
            try:
                sim = similarity_substitute(
                    pred.explanation, gold.explanation, embed_client
                )
                similarities.append(sim)
                row["similarity"] = sim
            except MetricUnavailable:
                similarity_available = False

        row["degenerate"] = degenerate
        degenerate_flags.append(degenerate)
        per_sample.append(row)

    def scope_mean(scope: Scope) -> float:
        values = src_by_scope[scope]
        if include_degenerate:
            return _mean(values)
        kept = [v for v, deg in zip(values, degenerate_flags) if not deg]
        return _mean(kept)

    n_skipped = sum(degenerate_flags)
    if task is TaskKind.TOPIC_LABEL:
        pair = (scope_mean(Scope.TOPIC), scope_mean(Scope.SUBTOPIC))
        src_mean = pair[0]
    else:
        pair = None
        src_mean = scope_mean(scopes[0])

    return TaskReport(
        task=task,
        src_mean=src_mean,
        src_pair=pair,
        jaccard_mean=_mean(jaccards),
        keyword_jaccard_mean=_mean(keyword_jaccards)
        if task is TaskKind.TOPIC_LABEL
        else None,
        similarity_mean=_mean(similarities)
        if similarity_available and similarities
        else None,
        n_evaluated=len(preds) - n_skipped,
        n_skipped=n_skipped,
        per_sample=per_sample,
    )
