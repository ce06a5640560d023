"""Minimal JSON-lines reading/writing with line-numbered diagnostics."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .core import EwraError


class JsonlError(EwraError):
    """Raised on malformed JSONL input; message carries path and line."""


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> int:
    """Write records one-per-line; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise JsonlError(f"{path}:{lineno}: expected a JSON object")
            yield record


def read_jsonl(path: str | Path) -> list[dict]:
    return list(iter_jsonl(path))
