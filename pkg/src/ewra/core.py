"""Domain types, the category taxonomy, and probability-distribution arithmetic.

Everything here is a pure function over immutable values; the rest of the
pipeline builds on these primitives.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

# Probability-sum bands. A distribution whose entries sum to within
# SUM_TOLERANCE of 1 is accepted as-is; sums inside the repair band are
# renormalized; anything else is rejected.
SUM_TOLERANCE = 0.01
REPAIR_LOW = 0.95
REPAIR_HIGH = 1.05


class EwraError(Exception):
    """Base class for errors raised by this package."""


class TransportError(EwraError):
    """Network-level failure (connect/timeout/retryable status)."""


class TaxonomyError(EwraError):
    """Raised when a taxonomy violates its structural invariants."""


class TaskKind(Enum):
    """The three analysis tasks."""

    VIE = "vie"
    TOPIC_LABEL = "topic"
    EMOTION = "emotion"


class Scope(Enum):
    """Category scope a distribution is defined over."""

    VIE = "vie"
    TOPIC = "topic"
    SUBTOPIC = "subtopic"
    EMOTION = "emotion"

    @property
    def task(self) -> TaskKind:
        if self is Scope.VIE:
            return TaskKind.VIE
        if self is Scope.EMOTION:
            return TaskKind.EMOTION
        return TaskKind.TOPIC_LABEL


def scopes_for_task(task: TaskKind) -> tuple[Scope, ...]:
    """Distribution scopes a task's outputs carry, in output order."""
    if task is TaskKind.VIE:
        return (Scope.VIE,)
    if task is TaskKind.TOPIC_LABEL:
        return (Scope.TOPIC, Scope.SUBTOPIC)
    return (Scope.EMOTION,)


class EventType(Enum):
    HEATWAVE = "heatwave"
    COLD = "cold"
    WIND = "wind"
    RAIN = "rain"
    FLOODS = "floods"


def slugify(text: str) -> str:
    """Stable lowercase identifier: letters/digits kept, runs of anything
    else collapsed to single hyphens."""
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "event"


@dataclass(frozen=True)
class Event:
    """A registered extreme-weather event driving ingestion windows and
    queries."""

    name: str
    event_type: EventType
    country: str
    event_date: date
    proxy_query_name: str = ""
    admin_scope: tuple[str, ...] = ()
    id: str = ""

    def __post_init__(self):
        if not self.proxy_query_name:
            object.__setattr__(self, "proxy_query_name", self.name)
        if not self.id:
            object.__setattr__(self, "id", slugify(self.name))


@dataclass(frozen=True)
class GazetteerHit:
    """A place-name match inside a sentence."""

    name: str
    country: str
    admin1: str = ""
    admin2: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "admin1": self.admin1, "admin2": self.admin2}


@dataclass(frozen=True)
class Sentence:
    """A curated sentence tied back to its source article and event.

    After curation the text length is within [30, 200] characters and
    matched_locations is nonempty.
    """

    text: str
    source_url: str
    event_ref: str
    matched_locations: tuple[GazetteerHit, ...] = ()


@dataclass(frozen=True)
class Taxonomy:
    """Category sets for the three tasks plus per-category definitions.

    ``definitions`` is keyed by scope value then category name, because the
    name "Impact" appears both as a standalone category and as a topic with
    different definitions.
    """

    vie_categories: tuple[str, ...]
    topics: tuple[str, ...]
    subtopics: Mapping[str, tuple[str, ...]]
    emotions: tuple[str, ...]
    definitions: Mapping[str, Mapping[str, str]]

    def __post_init__(self):
        for scope in Scope:
            for name in self.categories_for(scope):
                text = self.definitions.get(scope.value, {}).get(name, "")
                if not text.strip():
                    raise TaxonomyError(
                        f"category {name!r} in scope {scope.value!r} has no definition"
                    )

    def categories_for(self, scope: Scope) -> tuple[str, ...]:
        if scope is Scope.VIE:
            return self.vie_categories
        if scope is Scope.TOPIC:
            return self.topics
        if scope is Scope.SUBTOPIC:
            out: list[str] = []
            for topic in self.topics:
                out.extend(self.subtopics.get(topic, ()))
            return tuple(out)
        return self.emotions

    def canonical_name(self, raw: str, scope: Scope) -> Optional[str]:
        """Resolve a raw category name to its taxonomy spelling.

        Matching is case-insensitive after trimming surrounding whitespace;
        internal spelling must match exactly. Returns None when unknown.
        """
        needle = raw.strip().lower()
        for name in self.categories_for(scope):
            if name.lower() == needle:
                return name
        return None

    def to_dict(self) -> dict:
        return {
            "vie_categories": list(self.vie_categories),
            "topics": list(self.topics),
            "subtopics": {k: list(v) for k, v in self.subtopics.items()},
            "emotions": list(self.emotions),
            "definitions": {k: dict(v) for k, v in self.definitions.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Taxonomy":
        try:
            return cls(
                vie_categories=tuple(data["vie_categories"]),
                topics=tuple(data["topics"]),
                subtopics={k: tuple(v) for k, v in data["subtopics"].items()},
                emotions=tuple(data["emotions"]),
                definitions={k: dict(v) for k, v in data["definitions"].items()},
            )
        except KeyError as exc:
            raise TaxonomyError(f"taxonomy config missing key {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise TaxonomyError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


DEFAULT_TAXONOMY = Taxonomy(
    vie_categories=("Vulnerability", "Impact", "Emergency", "Others"),
    topics=("Vulnerabilities", "Impact", "Emergency Response"),
    subtopics={
        "Vulnerabilities": ("Environmental", "Infrastructure", "Economic"),
        "Impact": ("Deaths", "Infrastructure Damage", "Economic Damage", "Homeless"),
        "Emergency Response": (
            "Evacuation",
            "Community Support",
            "Emergency Services",
            "Communication Strategies",
        ),
    },
    emotions=("Sadness", "Anger", "Fear", "Joy", "Optimism", "Trust", "Neutral"),
    definitions={
        "vie": {
            "Vulnerability": (
                "Describes conditions that make people or places prone to harm, "
                "including forecasts or warnings for specific locations about "
                "hazardous conditions (e.g., storm alerts, flood watches)."
            ),
            "Impact": (
                "Describes strictly measurable consequences of extreme weather, "
                "such as the number of casualties, injuries, financial loss, "
                "infrastructure damage, or economic impact."
            ),
            "Emergency": (
                "Describes urgent actions requiring immediate response, including "
                "evacuations, rescues, emergency shelters, or disaster response efforts."
            ),
            "Others": (
                "Sentences about extreme weather without clear Vulnerability, "
                "Impact, or Emergency markers."
            ),
        },
        "topic": {
            "Vulnerabilities": (
                "Identifies risk factors that make communities more susceptible to damage."
            ),
            "Impact": "Direct effects of extreme weather.",
            "Emergency Response": "Immediate actions taken to mitigate disasters.",
        },
        "subtopic": {
            "Environmental": "Fragile ecosystems that increase disaster impact.",
            "Infrastructure": "Structural weaknesses leading to heightened risk.",
            "Economic": "Financial instability due to disasters.",
            "Deaths": "Fatalities resulting from disasters.",
            "Infrastructure Damage": "Physical destruction of buildings and roads.",
            "Economic Damage": "Financial loss due to extreme weather.",
            "Homeless": "Displacement due to destruction.",
            "Evacuation": "Organized movement of people to safety.",
            "Community Support": "Aid provided by local and national organizations.",
            "Emergency Services": "Rescue and medical response efforts.",
            "Communication Strategies": "Plans for disseminating critical information.",
        },
        "emotion": {
            "Sadness": (
                "Expresses sorrow, grief, disappointment, or loss, often involving "
                "suffering or destruction."
            ),
            "Anger": (
                "Indicates frustration, outrage, or dissatisfaction, including "
                "expressions of blame or criticism."
            ),
            "Fear": (
                "Suggests concern, anxiety, or perceived threat, often linked to "
                "warnings or potential dangers."
            ),
            "Joy": "Reflects happiness, relief, celebration, or positive outcomes.",
            "Optimism": "Shows hope, encouragement, or confidence in a positive future.",
            "Trust": (
                "Indicates reliability, assurance, or faith in a person, system, "
                "or institution."
            ),
            "Neutral": (
                "Lacks strong emotional cues, purely factual, informational or "
                "descriptive."
            ),
        },
    },
)


@dataclass
class CategoryDistribution:
    """Probability assignment over one scope's category set.

    ``entries`` preserves insertion order (parse order, or taxonomy order
    after :func:`fill_missing`). Treated as immutable by convention.
    """

    entries: dict[str, float]
    scope: Scope

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def to_dict(self) -> dict[str, float]:
        return dict(self.entries)


class Verdict(Enum):
    VALID = "valid"
    REPAIRABLE = "repairable"
    INVALID = "invalid"


def validate_distribution(
    dist: CategoryDistribution, taxonomy: Taxonomy
) -> Verdict:
    """Classify a distribution as Valid, Repairable, or Invalid.

    Valid: all probabilities in [0, 1], all names in scope, and the sum is
    within SUM_TOLERANCE of 1. Repairable: same but the sum falls in the
    wider [REPAIR_LOW, REPAIR_HIGH] band (renormalization fixes it).
    Anything else, including an empty distribution, is Invalid.
    """
    if not dist.entries:
        return Verdict.INVALID
    for name, prob in dist.entries.items():
        if not isinstance(prob, (int, float)) or math.isnan(prob):
            return Verdict.INVALID
        if prob < 0.0 or prob > 1.0:
            return Verdict.INVALID
        if taxonomy.canonical_name(name, dist.scope) is None:
            return Verdict.INVALID
    total = dist.total()
    if abs(total - 1.0) <= SUM_TOLERANCE:
        return Verdict.VALID
    if REPAIR_LOW <= total <= REPAIR_HIGH:
        return Verdict.REPAIRABLE
    return Verdict.INVALID


def normalize_distribution(dist: CategoryDistribution) -> CategoryDistribution:
    """Divide every probability by the current sum.

    Raises ValueError on zero total mass. Preserves entry order, so the
    relative ranking of categories is untouched.
    """
    total = dist.total()
    if total <= 0.0:
        raise ValueError("cannot normalize a distribution with zero total mass")
    return CategoryDistribution(
        entries={name: prob / total for name, prob in dist.entries.items()},
        scope=dist.scope,
    )


def fill_missing(
    dist: CategoryDistribution, taxonomy: Taxonomy
) -> CategoryDistribution:
    """Expand to the full category set for the scope, in taxonomy order.

    Categories absent from the parsed distribution get probability 0.
    Known names are canonicalized to taxonomy spelling; unknown names are
    dropped (validation rejects them separately).
    """
    canonical: dict[str, float] = {}
    for name, prob in dist.entries.items():
        resolved = taxonomy.canonical_name(name, dist.scope)
        if resolved is not None:
            canonical[resolved] = prob
    entries = {
        name: canonical.get(name, 0.0)
        for name in taxonomy.categories_for(dist.scope)
    }
    return CategoryDistribution(entries=entries, scope=dist.scope)


def average_ranks(values: Iterable[float]) -> list[float]:
    """Rank values descending, 1 = largest; ties get the mean of the ranks
    they span."""
    vals = list(values)
    order = sorted(range(len(vals)), key=lambda i: -vals[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        # positions i..j (0-based) share ranks i+1..j+1
        mean_rank = (i + 1 + j + 1) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def ranks_from_distribution(dist: CategoryDistribution) -> list[float]:
    """Rank vector over the distribution's entries in their stored order.

    Callers wanting taxonomy ordering should :func:`fill_missing` first;
    rank 1 is the highest-probability category and ties receive average
    ranks.
    """
    return average_ranks(dist.entries.values())
