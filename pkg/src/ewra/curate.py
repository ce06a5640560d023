"""Turn raw articles into the filtered sentence corpus: segmentation,
length filtering, and gazetteer-based location matching.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .core import Event, EwraError, GazetteerHit, Sentence

MIN_SENTENCE_CHARS = 30
MAX_SENTENCE_CHARS = 200

# Tokens that end with a period without ending a sentence. Compared after
# stripping the trailing terminator and lowercasing.
ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "rev", "gen", "gov", "sen", "rep",
        "sgt", "col", "capt", "lt", "st", "jr", "sr", "vs", "etc", "inc",
        "ltd", "co", "corp", "dept", "est", "approx", "no", "vol", "fig",
        "e.g", "i.e", "a.m", "p.m", "u.s", "u.k", "u.n", "e.u", "u.s.a",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
        "oct", "nov", "dec", "mt", "ft",
    }
)


class GazetteerFormatError(EwraError):
    """Raised on unreadable gazetteer files; message carries the line."""


_TERMINATOR_RE = re.compile(r"[.!?]+")


def _is_guarded(text: str, end: int) -> bool:
    """True when the terminator ending at `end` closes a guarded
    abbreviation (or a single-letter initial) rather than a sentence."""
    head = text[:end]
    match = re.search(r"(\S+)$", head)
    if match is None:
        return False
    token = match.group(1).rstrip(".!?").lower()
    if not token:
        return False
    if token in ABBREVIATIONS:
        return True
    # single-letter initials such as "J." in names
    return len(token) == 1 and token.isalpha()


def segment_sentences(body: str) -> list[str]:
    """Split text on sentence terminators followed by whitespace and an
    uppercase letter (or end of text), guarding common abbreviations."""
    sentences: list[str] = []
    start = 0
    for match in _TERMINATOR_RE.finditer(body):
        end = match.end()
        tail = body[end:]
        at_eot = not tail.strip()
        boundary = re.match(r"\s+[\"'(\[]?[A-Z]", tail) is not None
        if not (at_eot or boundary):
            continue
        if not at_eot and _is_guarded(body, end):
            continue
        piece = body[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    trailing = body[start:].strip()
    if trailing:
        sentences.append(trailing)
    return sentences


def length_filter(sentence: str) -> bool:
    """Keep sentences of 30..200 characters inclusive."""
    return MIN_SENTENCE_CHARS <= len(sentence) <= MAX_SENTENCE_CHARS


@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    country: str
    admin1: str = ""
    admin2: str = ""


@dataclass
class Gazetteer:
    """Place-name lookup with a per-country index.

    Duplicate names are retained (multi-map); lookups are case-insensitive.
    """

    entries: list[GazetteerEntry] = field(default_factory=list)
    by_country: dict[str, dict[str, list[GazetteerEntry]]] = field(default_factory=dict)
    _patterns: dict[str, Optional[re.Pattern]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, entry: GazetteerEntry) -> None:
        self.entries.append(entry)
        country_index = self.by_country.setdefault(entry.country.lower(), {})
        country_index.setdefault(entry.name.lower(), []).append(entry)

    def names_for_country(self, country: str) -> list[str]:
        return list(self.by_country.get(country.lower(), {}))

    def lookup(self, name: str, country: str) -> list[GazetteerEntry]:
        return self.by_country.get(country.lower(), {}).get(name.lower(), [])

    def pattern_for_country(self, country: str) -> Optional[re.Pattern]:
        """Compiled longest-match-first alternation of the country's names
        plus the country label itself; cached per country."""
        key = country.lower()
        with self._lock:
            if key not in self._patterns:
                names = set(self.names_for_country(country))
                names.add(key)
                if not names:
                    self._patterns[key] = None
                else:
                    ordered = sorted(names, key=len, reverse=True)
                    alternation = "|".join(re.escape(name) for name in ordered)
                    self._patterns[key] = re.compile(
                        rf"\b(?:{alternation})\b", re.IGNORECASE
                    )
            return self._patterns[key]


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Load a tab-separated gazetteer: name, country_code, admin1_code,
    admin2_code. Trailing admin columns may be empty or absent."""
    gazetteer = Gazetteer()
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise GazetteerFormatError(f"{path}: cannot read ({exc})") from exc
    except UnicodeDecodeError as exc:
        raise GazetteerFormatError(f"{path}: not valid UTF-8 ({exc})") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) < 2:
            raise GazetteerFormatError(
                f"{path}:{lineno}: expected at least name and country_code columns"
            )
        name = columns[0].strip()
        country = columns[1].strip()
        if not name or not country:
            raise GazetteerFormatError(
                f"{path}:{lineno}: empty name or country_code"
            )
        admin1 = columns[2].strip() if len(columns) > 2 else ""
        admin2 = columns[3].strip() if len(columns) > 3 else ""
        gazetteer.add(GazetteerEntry(name=name, country=country, admin1=admin1, admin2=admin2))
    return gazetteer


def match_locations(
    sentence: str, gazetteer: Gazetteer, event: Event
) -> list[GazetteerHit]:
    """Longest-match, word-boundary, case-insensitive scan against names
    registered for the event's country (plus the country name itself)."""
    pattern = gazetteer.pattern_for_country(event.country)
    if pattern is None:
        return []
    hits: list[GazetteerHit] = []
    for match in pattern.finditer(sentence):
        surface = match.group(0)
        entries = gazetteer.lookup(surface, event.country)
        if not entries:
            # the country label itself
            hits.append(GazetteerHit(name=surface, country=event.country))
            continue
        for entry in entries:
            if event.admin_scope and not (
                entry.admin1 in event.admin_scope or entry.admin2 in event.admin_scope
            ):
                continue
            hits.append(
                GazetteerHit(
                    name=entry.name,
                    country=entry.country,
                    admin1=entry.admin1,
                    admin2=entry.admin2,
                )
            )
    return hits


@dataclass
class CurationReport:
    """Sentence-level accounting; kept + drops always equals segmented."""

    articles_in: int = 0
    articles_failed: int = 0
    segmented: int = 0
    dropped_short: int = 0
    dropped_long: int = 0
    dropped_no_location: int = 0
    kept: int = 0

    def reconciles(self) -> bool:
        return (
            self.kept
            + self.dropped_short
            + self.dropped_long
            + self.dropped_no_location
            == self.segmented
        )

    def to_dict(self) -> dict:
        return {
            "articles_in": self.articles_in,
            "articles_failed": self.articles_failed,
            "segmented": self.segmented,
            "dropped_short": self.dropped_short,
            "dropped_long": self.dropped_long,
            "dropped_no_location": self.dropped_no_location,
            "kept": self.kept,
        }


def curate(
    articles: Iterable[dict],
    gazetteer: Gazetteer,
    event: Event,
) -> tuple[list[Sentence], CurationReport]:
    """Segment article bodies, apply the length filter, and keep only
    sentences with at least one gazetteer hit.

    Articles are dicts with at least ``body`` and ``url`` (the corpus-file
    schema); per-article failures are counted, never fatal.
    """
    report = CurationReport()
    kept: list[Sentence] = []
    for article in articles:
        report.articles_in += 1
        # decide every sentence before committing counts, so a failing
        # article never leaves the report half-updated
        try:
            body = article.get("body") or ""
            url = article.get("url") or ""
            outcomes: list[tuple[str, Optional[Sentence]]] = []
            for text in segment_sentences(body):
                if len(text) < MIN_SENTENCE_CHARS:
                    outcomes.append(("short", None))
                elif len(text) > MAX_SENTENCE_CHARS:
                    outcomes.append(("long", None))
                else:
                    hits = match_locations(text, gazetteer, event)
                    if hits:
                        outcomes.append(
                            (
                                "kept",
                                Sentence(
                                    text=text,
                                    source_url=url,
                                    event_ref=event.id,
                                    matched_locations=tuple(hits),
                                ),
                            )
                        )
                    else:
                        outcomes.append(("no_location", None))
        except Exception:
            report.articles_failed += 1
            continue
        report.segmented += len(outcomes)
        for kind, sentence in outcomes:
            if kind == "short":
                report.dropped_short += 1
            elif kind == "long":
                report.dropped_long += 1
            elif kind == "no_location":
                report.dropped_no_location += 1
            else:
                report.kept += 1
                kept.append(sentence)
    return kept, report


def sentence_to_record(sentence: Sentence) -> dict:
    return {
        "text": sentence.text,
        "url": sentence.source_url,
        "event": sentence.event_ref,
        "locations": [hit.to_dict() for hit in sentence.matched_locations],
    }


def sentence_from_record(record: dict, default_event: str = "") -> Sentence:
    hits = tuple(
        GazetteerHit(
            name=loc.get("name", ""),
            country=loc.get("country", ""),
            admin1=loc.get("admin1", ""),
            admin2=loc.get("admin2", ""),
        )
        for loc in record.get("locations", [])
    )
    return Sentence(
        text=record.get("text", ""),
        source_url=record.get("url", ""),
        event_ref=record.get("event", default_event),
        matched_locations=hits,
    )
