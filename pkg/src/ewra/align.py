"""Alignment-data factory: prompt rendering, chat-completion calls, strict
response parsing, validation with repair, and retry/quarantine handling.
"""

from __future__ import annotations

import os
import re
import threading
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import requests

from .core import (
    CategoryDistribution,
    DEFAULT_TAXONOMY,
    EwraError,
    Scope,
    Sentence,
    TaskKind,
    Taxonomy,
    TransportError,
    Verdict,
    normalize_distribution,
    scopes_for_task,
    validate_distribution,
)
from .prompts import PromptVariant, default_template

DEFAULT_SYSTEM_PROMPT = (
    "You are a careful analyst of extreme-weather news. "
    "Follow the requested output format exactly."
)


class ParseError(EwraError):
    """Base for response-parsing failures."""


class OutputFormatError(ParseError):
    """Response does not carry the required sections or entries."""


class UnknownCategoryError(ParseError):
    """A probability line names a category outside the taxonomy scope."""


class ValidationFailure(EwraError):
    """A parsed distribution failed validation beyond repair."""


class EndpointError(EwraError):
    """The endpoint answered with a non-retryable error."""

    def __init__(self, message: str, status: Optional[int] = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


@dataclass
class RationaleOutput:
    """Parsed model response: reasoning text, one distribution per scope,
    optional keywords, and the raw text it came from."""

    think_text: str
    distributions: list[CategoryDistribution]
    keywords: Optional[list[str]]
    raw: str

    def distribution_for(self, scope: Scope) -> Optional[CategoryDistribution]:
        for dist in self.distributions:
            if dist.scope is scope:
                return dist
        return None


@dataclass
class AlignmentSample:
    """One unit of the alignment dataset."""

    id: str
    prompt: str
    sentence: Sentence
    output: RationaleOutput
    task: TaskKind
    variant: PromptVariant
    generator: dict
    flags: tuple[str, ...] = ()


@dataclass
class QuarantineRecord:
    sentence: str
    attempts: int
    raw_last: Optional[str]
    error: str


@dataclass
class GenerationResult:
    samples: list[AlignmentSample]
    quarantined: list[QuarantineRecord]


class GenerationAborted(EwraError):
    """Endpoint became unreachable; carries the partial result for
    persistence."""

    def __init__(self, message: str, partial: GenerationResult):
        super().__init__(message)
        self.partial = partial


_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_OUTPUT_RE = re.compile(r"<output>(.*?)</output>", re.DOTALL)
_HEADER_RE = re.compile(r"^\s*-?\s*(topic|sub[\s-]?topic|keywords)s?\s*:\s*(.*)$", re.IGNORECASE)
_ENTRY_RE = re.compile(r"^\s*-?\s*(.+?)\s*:\s*([0-9]*\.?[0-9]+)\s*$")
_INLINE_ITEM_RE = re.compile(r"^(.*?)\s*\(\s*([0-9]*\.?[0-9]+)\s*\)$")


def _classify_name(
    name: str,
    scopes: Sequence[Scope],
    taxonomy: Taxonomy,
    preferred: Optional[Scope],
) -> tuple[Scope, str]:
    order = list(scopes)
    if preferred is not None and preferred in order:
        order.remove(preferred)
        order.insert(0, preferred)
    for scope in order:
        canon = taxonomy.canonical_name(name, scope)
        if canon is not None:
            return scope, canon
    raise UnknownCategoryError(f"unknown category name: {name.strip()!r}")


def parse_output(
    raw: str, task: TaskKind, taxonomy: Taxonomy = DEFAULT_TAXONOMY
) -> RationaleOutput:
    """Parse a ``<think>/<output>`` response into a RationaleOutput.

    Probability lines have the form ``- Name: 0.4``; the topic task also
    accepts the inline form ``Impact (0.8)`` on its ``Topic:``/``Sub-Topic:``
    header lines, and requires a ``Keywords:`` line. Raises OutputFormatError
    or UnknownCategoryError; never anything else, whatever the input bytes.
    """
    think_match = _THINK_RE.search(raw)
    if think_match is None:
        raise OutputFormatError("missing <think> section")
    output_match = _OUTPUT_RE.search(raw)
    if output_match is None:
        raise OutputFormatError("missing <output> section")
    think_text = think_match.group(1).strip()
    if not think_text:
        raise OutputFormatError("empty <think> section")

    scopes = scopes_for_task(task)
    entries: dict[Scope, dict[str, float]] = {scope: {} for scope in scopes}
    keywords: Optional[list[str]] = None
    current: Optional[Scope] = None

    for line in output_match.group(1).splitlines():
        if not line.strip():
            continue
        header = _HEADER_RE.match(line)
        if header is not None:
            kind = re.sub(r"[\s-]", "", header.group(1).lower())
            rest = header.group(2).strip()
            if kind == "keywords":
                if task is TaskKind.TOPIC_LABEL and keywords is None:
                    keywords = [k.strip() for k in rest.split(",") if k.strip()]
                continue
            if task is not TaskKind.TOPIC_LABEL:
                continue
            scope = Scope.TOPIC if kind == "topic" else Scope.SUBTOPIC
            current = scope
            if rest:
                for item in rest.split(","):
                    item = item.strip()
                    if not item:
                        continue
                    inline = _INLINE_ITEM_RE.match(item)
                    if inline is None:
                        raise OutputFormatError(
                            f"unparseable item {item!r} on {header.group(1)} line"
                        )
                    canon = taxonomy.canonical_name(inline.group(1), scope)
                    if canon is None:
                        raise UnknownCategoryError(
                            f"unknown category name: {inline.group(1).strip()!r}"
                        )
                    entries[scope][canon] = float(inline.group(2))
            continue
        entry = _ENTRY_RE.match(line)
        if entry is not None:
            scope, canon = _classify_name(entry.group(1), scopes, taxonomy, current)
            entries[scope][canon] = float(entry.group(2))

    distributions = []
    for scope in scopes:
        if not entries[scope]:
            raise OutputFormatError(
                f"no parseable probability lines for scope {scope.value!r}"
            )
        distributions.append(CategoryDistribution(entries=entries[scope], scope=scope))

    if task is TaskKind.TOPIC_LABEL:
        if keywords is None:
            raise OutputFormatError("missing Keywords line")
    else:
        keywords = None

    return RationaleOutput(
        think_text=think_text, distributions=distributions, keywords=keywords, raw=raw
    )


@dataclass
class GeneratorConfig:
    """Endpoint, decoding, retry, and concurrency settings for generation."""

    endpoint: str
    model: str = "default"
    api_key: Optional[str] = None
    temperature: float = 0.7
    max_tokens: int = 1024
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    max_retries: int = 3
    backoff_base: float = 2.0
    timeout: float = 60.0
    in_flight: int = 4
    rate_limit_per_s: Optional[float] = None

    def metadata(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


@dataclass
class Completion:
    text: str
    latency_s: float
    usage: Optional[dict] = None


class TokenBucket:
    """Thread-safe token bucket; acquire() blocks until a token is free."""

    def __init__(self, rate_per_s: float, capacity: Optional[float] = None):
        self.rate = float(rate_per_s)
        self.capacity = capacity if capacity is not None else max(1.0, self.rate)
        self._tokens = self.capacity
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._updated) * self.rate
                )
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait_s = (1.0 - self._tokens) / self.rate
            time.sleep(wait_s)


def build_session() -> requests.Session:
    session = requests.Session()
    proxy = os.environ.get("EWRA_HTTP_PROXY")
    if proxy:
        session.proxies.update({"http": proxy, "https": proxy})
    return session


class ChatClient:
    """Minimal chat-completions client with backoff-and-retry.

    Connection failures, timeouts, and 429 responses are retried with
    exponential backoff up to max_retries attempts; any other non-2xx answer
    raises EndpointError immediately.
    """

    def __init__(
        self,
        cfg: GeneratorConfig,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        self.session = session or build_session()
        self._sleep = sleep
        self._bucket = (
            TokenBucket(cfg.rate_limit_per_s) if cfg.rate_limit_per_s else None
        )

    def complete(self, prompt: str) -> Completion:
        payload = {
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": self.cfg.system_prompt},
                {"role": "user", "content": prompt},
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        }
        headers = {}
        if self.cfg.api_key:
            headers["Authorization"] = f"Bearer {self.cfg.api_key}"

        last_error = "no attempt made"
        for attempt in range(1, self.cfg.max_retries + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            started = time.monotonic()
            try:
                response = self.session.post(
                    self.cfg.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.cfg.timeout,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = f"transport failure: {exc}"
            else:
                if response.status_code == 429:
                    last_error = "rate-limited (HTTP 429)"
                elif not response.ok:
                    raise EndpointError(
                        f"endpoint returned HTTP {response.status_code}",
                        status=response.status_code,
                        body=response.text[:2000],
                    )
                else:
                    latency = time.monotonic() - started
                    try:
                        body = response.json()
                        text = body["choices"][0]["message"]["content"]
                    except (ValueError, LookupError, TypeError) as exc:
                        raise EndpointError(
                            f"malformed completion body: {exc}",
                            status=response.status_code,
                            body=response.text[:2000],
                        ) from exc
                    return Completion(
                        text=text, latency_s=latency, usage=body.get("usage")
                    )
            if attempt < self.cfg.max_retries:
                self._sleep(self.cfg.backoff_base * 2 ** (attempt - 1))
        raise TransportError(
            f"giving up after {self.cfg.max_retries} attempts: {last_error}"
        )


def _validate_and_repair(
    output: RationaleOutput, taxonomy: Taxonomy
) -> tuple[RationaleOutput, tuple[str, ...]]:
    """Check every distribution; renormalize the repairable ones.

    Raises ValidationFailure when any distribution is Invalid.
    """
    flags: list[str] = []
    fixed: list[CategoryDistribution] = []
    for dist in output.distributions:
        verdict = validate_distribution(dist, taxonomy)
        if verdict is Verdict.INVALID:
            raise ValidationFailure(
                f"{dist.scope.value} distribution invalid (sum={dist.total():.4f})"
            )
        if verdict is Verdict.REPAIRABLE:
            dist = normalize_distribution(dist)
            flags.append(f"repaired:{dist.scope.value}")
        fixed.append(dist)
    repaired = RationaleOutput(
        think_text=output.think_text,
        distributions=fixed,
        keywords=output.keywords,
        raw=output.raw,
    )
    return repaired, tuple(flags)


def generate(
    sentences: Sequence[Sentence],
    task: TaskKind,
    variant: PromptVariant,
    cfg: GeneratorConfig,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    client: Optional[ChatClient] = None,
    on_result: Optional[Callable[[int, str, object], None]] = None,
) -> GenerationResult:
    """Render, complete, parse, and validate every sentence.

    Each input ends up either as a validated AlignmentSample or a
    QuarantineRecord (after max_retries identical-prompt attempts); output
    order follows input order regardless of completion scheduling. A
    persistent transport failure aborts with the partial result attached.
    """
    template = default_template(task, variant)
    chat = client or ChatClient(cfg)
    report_lock = threading.Lock()

    def notify(index: int, kind: str, payload) -> None:
        if on_result is not None:
            with report_lock:
                on_result(index, kind, payload)

    def process(index: int, sentence: Sentence):
        prompt = template.render(sentence.text)
        last_raw: Optional[str] = None
        last_error = "no attempt made"
        for attempt in range(1, cfg.max_retries + 1):
            completion = chat.complete(prompt)
            last_raw = completion.text
            try:
                parsed = parse_output(completion.text, task, taxonomy)
                output, flags = _validate_and_repair(parsed, taxonomy)
            except (ParseError, ValidationFailure) as exc:
                last_error = str(exc)
                if attempt < cfg.max_retries:
                    time.sleep(cfg.backoff_base * 2 ** (attempt - 1))
                continue
            sample = AlignmentSample(
                id=f"{task.value}-{variant.value}-{index:06d}",
                prompt=prompt,
                sentence=sentence,
                output=output,
                task=task,
                variant=variant,
                generator=cfg.metadata(),
                flags=flags,
            )
            notify(index, "sample", sample)
            return "sample", sample
        record = QuarantineRecord(
            sentence=sentence.text,
            attempts=cfg.max_retries,
            raw_last=last_raw,
            error=last_error,
        )
        notify(index, "quarantine", record)
        return "quarantine", record

    slots: list[Optional[tuple]] = [None] * len(sentences)
    abort_cause: Optional[Exception] = None
    with ThreadPoolExecutor(max_workers=max(1, cfg.in_flight)) as pool:
        futures = {
            pool.submit(process, i, s): i for i, s in enumerate(sentences)
        }
        done, not_done = wait(futures, return_when=FIRST_EXCEPTION)
        for future in done:
            exc = future.exception()
            if exc is not None:
                abort_cause = exc
                continue
            slots[futures[future]] = future.result()
        for future in not_done:
            future.cancel()

    samples = [slot[1] for slot in slots if slot and slot[0] == "sample"]
    quarantined = [slot[1] for slot in slots if slot and slot[0] == "quarantine"]
    result = GenerationResult(samples=samples, quarantined=quarantined)

    if abort_cause is not None:
        if isinstance(abort_cause, (TransportError, EndpointError)):
            raise GenerationAborted(
                f"generation aborted: {abort_cause}", partial=result
            )
        raise abort_cause
    return result


def sample_to_record(sample: AlignmentSample) -> dict:
    """Serialize to the alignment-dataset JSONL schema."""
    return {
        "id": sample.id,
        "task": sample.task.value,
        "variant": sample.variant.value,
        "sentence": sample.sentence.text,
        "prompt": sample.prompt,
        "think": sample.output.think_text,
        "distributions": {
            dist.scope.value: dist.to_dict() for dist in sample.output.distributions
        },
        "keywords": sample.output.keywords,
        "generator": sample.generator,
        "flags": list(sample.flags),
    }


def quarantine_to_record(record: QuarantineRecord) -> dict:
    return {
        "sentence": record.sentence,
        "attempts": record.attempts,
        "raw_last": record.raw_last,
        "error": record.error,
    }
