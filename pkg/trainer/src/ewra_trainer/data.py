"""Instruction-tuning records (instruction/input/output JSONL) encoded as
byte sequences with the loss masked to target tokens."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch

from .model import BOS_ID, EOS_ID, PAD_ID, ByteTokenizer

IGNORE_INDEX = -100


class DataError(RuntimeError):
    pass


@dataclass
class EncodedExample:
    input_ids: list[int]
    labels: list[int]


def load_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            for key in ("instruction", "input", "output"):
                if key not in record:
                    raise DataError(f"{path}:{lineno}: missing field {key!r}")
            records.append(record)
    if not records:
        raise DataError(f"{path}: no records")
    return records


def encode_example(
    record: dict, tokenizer: ByteTokenizer, max_seq_len: int
) -> EncodedExample:
    """BOS + instruction-bytes + target-bytes + EOS, loss on target+EOS only.

    When the pair exceeds max_seq_len the instruction is truncated from the
    left (its tail stays next to the target); an oversized target is cut at
    the right.
    """
    prompt = [BOS_ID] + tokenizer.encode(record["instruction"])
    target = tokenizer.encode(record["output"]) + [EOS_ID]
    if len(target) > max_seq_len - 2:
        target = target[: max_seq_len - 2]
    room = max_seq_len - len(target)
    if len(prompt) > room:
        prompt = [BOS_ID] + prompt[len(prompt) - room + 1 :]
    input_ids = prompt + target
    labels = [IGNORE_INDEX] * len(prompt) + list(target)
    return EncodedExample(input_ids=input_ids, labels=labels)


def collate(examples: list[EncodedExample]) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(e.input_ids) for e in examples)
    input_ids = torch.full((len(examples), width), PAD_ID, dtype=torch.long)
    labels = torch.full((len(examples), width), IGNORE_INDEX, dtype=torch.long)
    for row, example in enumerate(examples):
        input_ids[row, : len(example.input_ids)] = torch.tensor(example.input_ids)
        labels[row, : len(example.labels)] = torch.tensor(example.labels)
    return input_ids, labels


def batches(
    examples: list[EncodedExample],
    batch_size: int,
    seed: int,
    epoch: int,
    shuffle: bool = True,
):
    order = list(range(len(examples)))
    if shuffle:
        random.Random(seed * 1000 + epoch).shuffle(order)
    for start in range(0, len(order), batch_size):
        chunk = [examples[i] for i in order[start : start + batch_size]]
        yield collate(chunk)
