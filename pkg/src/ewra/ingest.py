"""News-feed ingestion: query construction, RSS fetching/parsing, article
extraction, windowing, and deduplication.
"""

from __future__ import annotations

import logging
import threading
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime
from email.utils import parsedate_to_datetime
from html.parser import HTMLParser
from typing import Optional, Sequence
from urllib.parse import quote, urlparse

import requests

from .align import build_session
from .core import Event, EwraError, TransportError

logger = logging.getLogger(__name__)

DEFAULT_FEED_BASE = "https://news.google.com/rss/search"
DEFAULT_WINDOW_DAYS = 31


class FeedFormatError(EwraError):
    """The fetched body is not a parseable RSS document."""


class ExtractionError(EwraError):
    """Article extraction produced no usable body text."""


@dataclass(frozen=True)
class KeywordBank:
    """Thematic search keywords in three groups; weather-condition keywords
    skip the trailing "weather" anchor when queries are built."""

    public: tuple[str, ...]
    economic: tuple[str, ...]
    weather: tuple[str, ...]

    @classmethod
    def from_dict(cls, data: dict) -> "KeywordBank":
        return cls(
            public=tuple(str(k).lower() for k in data.get("public", [])),
            economic=tuple(str(k).lower() for k in data.get("economic", [])),
            weather=tuple(str(k).lower() for k in data.get("weather", [])),
        )

    def to_dict(self) -> dict:
        return {
            "public": list(self.public),
            "economic": list(self.economic),
            "weather": list(self.weather),
        }


DEFAULT_KEYWORD_BANK = KeywordBank(
    public=(
        "public", "community", "people", "infrastructure", "society", "impact",
        "disruption", "affected", "resilience", "support", "relief", "aid",
        "assistance", "emergency", "response", "preparedness", "adaptation",
        "mitigation", "awareness", "engagement", "cooperation", "solidarity",
        "social", "health", "welfare", "equity", "inclusion", "vulnerability",
        "risk", "protection", "shelter", "evacuation", "relocation", "caution",
        "damage", "evacuation", "injury", "help", "sympathy",
    ),
    economic=(
        "damage", "loss", "economic", "cost", "impact", "financial", "property",
        "disaster", "recovery", "reconstruction", "insurance", "business",
        "investment", "job_loss", "economic_growth", "market_disruption",
        "supply_chain", "infrastructure", "resilience", "recovery_funds",
        "economic_development", "employment", "gdp_impact", "financial_aid",
        "bailout", "debt", "bankruptcy", "taxation",
    ),
    weather=(
        "dry", "snow", "high temperature", "wind", "thunderstorms", "rain",
        "winter", "cold", "summer", "hot", "lost moisture", "pressure",
        "water vapor", "sea level pressure", "precipitation",
    ),
)


@dataclass(frozen=True)
class FeedItem:
    title: str
    link: str
    published: Optional[datetime]
    description: str = ""


@dataclass
class Article:
    url: str
    title: str
    body: str
    published: Optional[datetime]
    event_ref: str = ""
    query_used: str = ""


def build_queries(event: Event, bank: KeywordBank) -> list[str]:
    """One query per keyword: "<proxy> <country> <keyword> weather" for
    public/economic keywords, without the anchor for weather-condition
    keywords (those are already meteorological). Deduplicated, bank order.
    """
    if not event.name.strip():
        raise ValueError("event name must be nonempty")
    if not event.country.strip():
        raise ValueError("event country must be nonempty")
    prefix = f"{event.proxy_query_name} {event.country}"
    queries: list[str] = []
    seen: set[str] = set()

    def push(query: str) -> None:
        if query not in seen:
            seen.add(query)
            queries.append(query)

    for keyword in bank.public:
        push(f"{prefix} {keyword} weather")
    for keyword in bank.economic:
        push(f"{prefix} {keyword} weather")
    for keyword in bank.weather:
        push(f"{prefix} {keyword}")
    return queries


def feed_url(query: str, locale: str = "en-US", base: str = DEFAULT_FEED_BASE) -> str:
    """RSS search URL with the query percent-encoded, e.g.
    ``<base>?q=a%20b&hl=en-US&gl=US&ceid=US:en``."""
    if not query.strip():
        raise ValueError("query must be nonempty")
    return f"{base}?q={quote(query, safe='')}&hl={locale}&gl=US&ceid=US:en"


def _is_absolute_url(url: str) -> bool:
    try:
        parsed = urlparse(url)
    except ValueError:
        return False
    return bool(parsed.scheme) and bool(parsed.netloc)


def parse_feed(data: bytes) -> tuple[list[FeedItem], int]:
    """Parse RSS 2.0 bytes into feed items.

    Returns (items, skipped) where skipped counts malformed items (no
    absolute link). Items without a parseable pubDate are kept with a null
    timestamp. Raises FeedFormatError on anything that is not an XML feed;
    no other exception escapes, whatever the input bytes.
    """
    try:
        root = ET.fromstring(data)
    except Exception as exc:
        raise FeedFormatError(f"not parseable XML: {exc}") from exc
    items: list[FeedItem] = []
    skipped = 0
    for node in root.iter("item"):
        link = (node.findtext("link") or "").strip()
        if not _is_absolute_url(link):
            skipped += 1
            continue
        published: Optional[datetime] = None
        raw_date = (node.findtext("pubDate") or "").strip()
        if raw_date:
            try:
                published = parsedate_to_datetime(raw_date)
            except (TypeError, ValueError):
                published = None
        if published is None:
            logger.warning("feed item without usable pubDate: %s", link)
        items.append(
            FeedItem(
                title=(node.findtext("title") or "").strip(),
                link=link,
                published=published,
                description=(node.findtext("description") or "").strip(),
            )
        )
    return items, skipped


def fetch_feed(
    url: str,
    session: Optional[requests.Session] = None,
    timeout: float = 15.0,
) -> list[FeedItem]:
    """GET an RSS URL and parse it; transport problems raise TransportError,
    non-XML bodies raise FeedFormatError."""
    session = session or build_session()
    try:
        response = session.get(url, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise TransportError(f"feed fetch failed: {exc}") from exc
    if not response.ok:
        raise TransportError(f"feed fetch returned HTTP {response.status_code}")
    items, skipped = parse_feed(response.content)
    if skipped:
        logger.warning("skipped %d malformed feed items from %s", skipped, url)
    return items


def within_window(
    published: Optional[datetime],
    event_date: date,
    half_width_days: int = DEFAULT_WINDOW_DAYS,
) -> bool:
    """True iff the publish date lies within +/- half_width_days of the
    event date; unknown timestamps never pass."""
    if published is None:
        return False
    return abs((published.date() - event_date).days) <= half_width_days


_SKIP_SUBTREES = frozenset(
    {"script", "style", "noscript", "svg", "iframe", "head", "template",
     "nav", "footer", "aside", "form", "button"}
)
_BLOCK_TAGS = frozenset(
    {"p", "div", "section", "article", "main", "body", "li", "td", "th",
     "blockquote", "pre", "h1", "h2", "h3", "h4", "h5", "h6", "figure",
     "figcaption", "header", "ul", "ol", "table", "tr", "br"}
)
_VOID_TAGS = frozenset({"br", "hr", "img", "input", "meta", "link", "area", "base"})


class _TextExtractor(HTMLParser):
    """Collects text runs per element so the largest text-bearing container
    can be picked afterwards."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.next_id = 0
        self.stack: list[tuple[str, int]] = []
        self.skip_depth = 0
        self.text_len: dict[int, int] = {}
        self.tag_of: dict[int, str] = {}
        self.depth_of: dict[int, int] = {}
        self.chunks: list[tuple[tuple[int, ...], int, str]] = []
        self.title_parts: list[str] = []
        self.block_counter = 0

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        if tag in _BLOCK_TAGS:
            self.block_counter += 1
        if tag in _VOID_TAGS:
            return
        if tag in _SKIP_SUBTREES or self.skip_depth:
            self.skip_depth += 1
        node_id = self.next_id
        self.next_id += 1
        self.tag_of[node_id] = tag
        self.depth_of[node_id] = len(self.stack)
        self.text_len[node_id] = 0
        self.stack.append((tag, node_id))

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag in _VOID_TAGS:
            return
        if tag in _BLOCK_TAGS:
            self.block_counter += 1
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i][0] == tag:
                del self.stack[i:]
                break
        if self.skip_depth:
            self.skip_depth -= 1

    def handle_data(self, data):
        text = " ".join(data.split())
        if not text:
            return
        if self.stack and self.stack[-1][0] == "title":
            self.title_parts.append(text)
            return
        if self.skip_depth:
            return
        ancestors = tuple(node_id for _, node_id in self.stack)
        for node_id in ancestors:
            self.text_len[node_id] += len(text)
        self.chunks.append((ancestors, self.block_counter, text))


def extract_text(html: str) -> tuple[str, str]:
    """(title, body) from an HTML document.

    Body selection: the deepest element carrying at least 80% of the page's
    stripped text ("largest contiguous text block"); text inside
    script/style/nav/footer-style subtrees never counts. Paragraph breaks
    follow block-level tag boundaries.
    """
    parser = _TextExtractor()
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        # html.parser is tolerant; treat residual errors as no content
        return "", ""
    title = " ".join(parser.title_parts)
    if not parser.chunks:
        return title, ""
    total = sum(len(text) for _, _, text in parser.chunks)
    best_id: Optional[int] = None
    best_depth = -1
    for node_id, size in parser.text_len.items():
        if size >= 0.8 * total and parser.depth_of[node_id] > best_depth:
            best_id = node_id
            best_depth = parser.depth_of[node_id]
    paragraphs: list[str] = []
    current_block: Optional[int] = None
    for ancestors, block, text in parser.chunks:
        if best_id is not None and best_id not in ancestors:
            continue
        if block != current_block or not paragraphs:
            paragraphs.append(text)
            current_block = block
        else:
            paragraphs[-1] = f"{paragraphs[-1]} {text}"
    body = "\n".join(p for p in paragraphs if p.strip())
    return title, body


def extract_article(
    item: FeedItem,
    session: Optional[requests.Session] = None,
    timeout: float = 15.0,
) -> Article:
    """Download the linked page, strip markup/boilerplate, and return the
    article with its canonical (post-redirect) URL."""
    session = session or build_session()
    try:
        response = session.get(item.link, timeout=timeout, allow_redirects=True)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise TransportError(f"article fetch failed: {exc}") from exc
    if not response.ok:
        raise TransportError(f"article fetch returned HTTP {response.status_code}")
    title, body = extract_text(response.text)
    if not body.strip():
        raise ExtractionError(f"no body text extracted from {response.url}")
    return Article(
        url=str(response.url),
        title=title or item.title,
        body=body,
        published=item.published,
    )


def _normalized_title(title: str) -> str:
    return " ".join(title.lower().split())


def dedupe(articles: Sequence[Article]) -> list[Article]:
    """Drop duplicates by canonical URL and by (normalized title,
    publish day); first occurrence wins, order preserved."""
    seen_urls: set[str] = set()
    seen_title_day: set[tuple[str, Optional[date]]] = set()
    out: list[Article] = []
    for article in articles:
        day = article.published.date() if article.published else None
        title_key = (_normalized_title(article.title), day)
        if article.url in seen_urls or title_key in seen_title_day:
            continue
        seen_urls.add(article.url)
        seen_title_day.add(title_key)
        out.append(article)
    return out


class PolitenessGate:
    """Serializes requests per host with a minimum delay between them."""

    def __init__(self, delay_s: float):
        self.delay_s = delay_s
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self._registry = threading.Lock()

    def wait(self, url: str) -> None:
        if self.delay_s <= 0:
            return
        host = urlparse(url).netloc
        with self._registry:
            lock = self._locks.setdefault(host, threading.Lock())
        with lock:
            now = time.monotonic()
            elapsed = now - self._last.get(host, -self.delay_s)
            if elapsed < self.delay_s:
                time.sleep(self.delay_s - elapsed)
            self._last[host] = time.monotonic()


@dataclass
class IngestOptions:
    feed_base: str = DEFAULT_FEED_BASE
    locale: str = "en-US"
    window_days: int = DEFAULT_WINDOW_DAYS
    keep_undated: bool = True
    workers: int = 8
    politeness_delay_s: float = 1.0
    timeout: float = 15.0


@dataclass
class IngestSummary:
    event: str
    queries: int = 0
    feed_items: int = 0
    in_window: int = 0
    undated_kept: int = 0
    feed_failures: int = 0
    extraction_failures: int = 0
    kept: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_ingest(
    event: Event,
    bank: KeywordBank = DEFAULT_KEYWORD_BANK,
    options: IngestOptions = IngestOptions(),
    session: Optional[requests.Session] = None,
) -> tuple[list[Article], IngestSummary]:
    """Full ingest for one event: queries -> feeds -> windowing ->
    extraction -> dedupe.

    Fetching is concurrent with a bounded worker pool and a per-host
    politeness delay; the merged result is ordered by (query index, item
    index) so output is independent of scheduling.
    """
    session = session or build_session()
    gate = PolitenessGate(options.politeness_delay_s)
    queries = build_queries(event, bank)
    summary = IngestSummary(event=event.id, queries=len(queries))

    def fetch_one(query: str) -> list[FeedItem]:
        url = feed_url(query, locale=options.locale, base=options.feed_base)
        gate.wait(url)
        return fetch_feed(url, session=session, timeout=options.timeout)

    per_query: list[list[FeedItem]] = [[] for _ in queries]
    with ThreadPoolExecutor(max_workers=max(1, options.workers)) as pool:
        futures = {pool.submit(fetch_one, q): i for i, q in enumerate(queries)}
        for future, index in futures.items():
            try:
                per_query[index] = future.result()
            except (TransportError, FeedFormatError) as exc:
                summary.feed_failures += 1
                logger.warning("feed fetch failed for query %r: %s", queries[index], exc)

    candidates: list[tuple[int, FeedItem]] = []
    seen_links: set[str] = set()
    for query_index, items in enumerate(per_query):
        for item in items:
            summary.feed_items += 1
            if item.published is None:
                if not options.keep_undated:
                    continue
                summary.undated_kept += 1
            elif not within_window(item.published, event.event_date, options.window_days):
                continue
            else:
                summary.in_window += 1
            if item.link in seen_links:
                continue
            seen_links.add(item.link)
            candidates.append((query_index, item))

    def extract_one(pair: tuple[int, FeedItem]) -> Article:
        query_index, item = pair
        gate.wait(item.link)
        article = extract_article(item, session=session, timeout=options.timeout)
        article.event_ref = event.id
        article.query_used = queries[query_index]
        return article

    extracted: list[Optional[Article]] = [None] * len(candidates)
    with ThreadPoolExecutor(max_workers=max(1, options.workers)) as pool:
        futures = {pool.submit(extract_one, pair): i for i, pair in enumerate(candidates)}
        for future, index in futures.items():
            try:
                extracted[index] = future.result()
            except (TransportError, ExtractionError) as exc:
                summary.extraction_failures += 1
                logger.warning("extraction failed for %s: %s", candidates[index][1].link, exc)

    articles = dedupe([a for a in extracted if a is not None])
    summary.kept = len(articles)
    return articles, summary


def article_to_record(article: Article) -> dict:
    return {
        "url": article.url,
        "title": article.title,
        "body": article.body,
        "published": article.published.isoformat() if article.published else None,
        "event": article.event_ref,
        "query": article.query_used,
    }


def article_from_record(record: dict) -> Article:
    published = None
    if record.get("published"):
        try:
            published = datetime.fromisoformat(record["published"])
        except ValueError:
            published = None
    return Article(
        url=record.get("url", ""),
        title=record.get("title", ""),
        body=record.get("body", ""),
        published=published,
        event_ref=record.get("event", ""),
        query_used=record.get("query", ""),
    )
