"""Split the alignment dataset, build the training-regime datasets, and
emit curriculum plans (ordered JSONL stages plus a machine-readable plan
file for the trainer).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .core import EwraError, TaskKind
from .jsonl import write_jsonl

# Fine-tuning settings carried verbatim into every plan file.
PLAN_HYPERPARAMETERS = {
    "learning_rate": 2e-4,
    "lora_rank": 16,
    "lora_alpha": 16,
    "effective_batch": 64,
    "qk_only": True,
    "seed": 3407,
    "max_seq_len": 2048,
    "reset_optimizer": False,
}


class DataError(EwraError):
    """Input samples violate a regime's variant requirements."""


class RegimeKind(Enum):
    DIRECT_SFT = "direct"
    REASON_IMPLICIT = "reason-implicit"
    REASON_EXPLICIT = "reason-explicit"
    EWRA = "ewra"
    REVERSE_EWRA = "reverse-ewra"


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 3407

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ValueError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


@dataclass
class TrainingRecord:
    """One supervised example; serialized as instruction/input/output."""

    instruction: str
    input: str
    target: str

    def to_record(self) -> dict:
        return {"instruction": self.instruction, "input": self.input, "output": self.target}


@dataclass(frozen=True)
class CurriculumStage:
    path: str
    epochs: int
    label: str

    def to_dict(self) -> dict:
        return {"path": self.path, "epochs": self.epochs, "label": self.label}


@dataclass
class CurriculumPlan:
    regime: RegimeKind
    stages: list[CurriculumStage]
    hyperparameters: dict = field(default_factory=lambda: dict(PLAN_HYPERPARAMETERS))

    @property
    def total_epochs(self) -> int:
        return sum(stage.epochs for stage in self.stages)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "stages": [stage.to_dict() for stage in self.stages],
            "hyperparameters": dict(self.hyperparameters),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def split(
    samples: Sequence[dict], spec: SplitSpec = SplitSpec()
) -> tuple[list[dict], list[dict], list[dict]]:
    """Deterministic, sentence-leakage-free train/val/test partition.

    Samples sharing a sentence always land in the same partition. Target
    sizes are floor(n * frac) with the flooring remainder distributed
    train-first; with one sample per sentence the sizes are met exactly.
    """
    n = len(samples)
    if n == 0:
        return [], [], []

    groups: dict[str, list[int]] = {}
    for index, sample in enumerate(samples):
        key = sample.get("sentence", "")
        groups.setdefault(key, []).append(index)

    keys = list(groups)
    random.Random(spec.seed).shuffle(keys)

    targets = [
        int(n * spec.train_frac),
        int(n * spec.val_frac),
        int(n * spec.test_frac),
    ]
    remainder = n - sum(targets)
    for i in range(remainder):
        targets[i % 3] += 1

    buckets: list[list[int]] = [[], [], []]
    for key in keys:
        size = len(groups[key])
        placed = False
        for bucket, target in zip(buckets, targets):
            if len(bucket) + size <= target:
                bucket.extend(groups[key])
                placed = True
                break
        if not placed:
            # no partition has room for the whole group; overflow into the
            # one with the most remaining capacity (train wins ties)
            spare = [t - len(b) for b, t in zip(buckets, targets)]
            buckets[spare.index(max(spare))].extend(groups[key])

    train, val, test = (
        [samples[i] for i in sorted(bucket)] for bucket in buckets
    )
    return train, val, test


def _format_prob(value: float) -> str:
    return format(value, "g")


def render_output_block(sample: dict) -> str:
    """Canonical <output> block re-rendered from a sample's parsed fields."""
    task = TaskKind(sample["task"])
    lines = ["Final Output:"]
    dists = sample.get("distributions", {})
    if task is TaskKind.TOPIC_LABEL:
        def inline(scope: str) -> str:
            return ", ".join(
                f"{name} ({_format_prob(prob)})"
                for name, prob in dists.get(scope, {}).items()
            )

        lines.append(f"- Topic: {inline('topic')}")
        lines.append(f"- Sub-Topic: {inline('subtopic')}")
        lines.append(f"- Keywords: {', '.join(sample.get('keywords') or [])}")
    else:
        scope = "vie" if task is TaskKind.VIE else "emotion"
        for name, prob in dists.get(scope, {}).items():
            lines.append(f"- {name}: {_format_prob(prob)}")
    return "<output>\n" + "\n".join(lines) + "\n</output>"


def render_reasoning_target(sample: dict) -> str:
    think = sample.get("think", "").strip()
    return f"<think>\n{think}\n</think>\n" + render_output_block(sample)


def _record_from(sample: dict, with_reasoning: bool) -> TrainingRecord:
    target = (
        render_reasoning_target(sample) if with_reasoning else render_output_block(sample)
    )
    return TrainingRecord(
        instruction=sample.get("prompt", ""),
        input=sample.get("sentence", ""),
        target=target,
    )


def _index_by_variant(
    samples: Sequence[dict],
) -> tuple[dict[tuple[str, str], dict], dict[tuple[str, str], dict]]:
    explicit: dict[tuple[str, str], dict] = {}
    implicit: dict[tuple[str, str], dict] = {}
    for sample in samples:
        key = (sample.get("task", ""), sample.get("sentence", ""))
        if sample.get("variant") == "explicit":
            explicit.setdefault(key, sample)
        elif sample.get("variant") == "implicit":
            implicit.setdefault(key, sample)
    return explicit, implicit


def build_regime(samples: Sequence[dict], kind: RegimeKind):
    """Build TrainingRecords for a regime.

    Single-stage regimes return a list; EWRA and ReverseEWRA return the
    (implicit_records, explicit_records) pair for staging. Samples lacking
    the variant a regime requires raise DataError listing the offenders.
    """
    explicit_by_key, implicit_by_key = _index_by_variant(samples)

    def offenders(required: dict, other: dict) -> list[str]:
        return sorted(
            str(sample.get("id", key))
            for key, sample in other.items()
            if key not in required
        )

    if kind in (RegimeKind.DIRECT_SFT, RegimeKind.REASON_EXPLICIT):
        missing = offenders(explicit_by_key, implicit_by_key)
        if not explicit_by_key or missing:
            raise DataError(
                f"regime {kind.value} requires explicit-variant samples; "
                f"offending ids: {missing or 'all'}"
            )
        with_reasoning = kind is RegimeKind.REASON_EXPLICIT
        return [
            _record_from(sample, with_reasoning=with_reasoning)
            for sample in samples
            if sample.get("variant") == "explicit"
        ]

    if kind is RegimeKind.REASON_IMPLICIT:
        missing = offenders(implicit_by_key, explicit_by_key)
        if not implicit_by_key or missing:
            raise DataError(
                f"regime {kind.value} requires implicit-variant samples; "
                f"offending ids: {missing or 'all'}"
            )
        return [
            _record_from(sample, with_reasoning=True)
            for sample in samples
            if sample.get("variant") == "implicit"
        ]

    # EWRA / ReverseEWRA need both variants for every (task, sentence)
    unpaired = offenders(explicit_by_key, implicit_by_key) + offenders(
        implicit_by_key, explicit_by_key
    )
    if not explicit_by_key or not implicit_by_key or unpaired:
        raise DataError(
            f"regime {kind.value} requires paired explicit/implicit samples; "
            f"offending ids: {sorted(unpaired) or 'all'}"
        )
    implicit_records = [
        _record_from(sample, with_reasoning=True)
        for sample in samples
        if sample.get("variant") == "implicit"
    ]
    explicit_records = [
        _record_from(sample, with_reasoning=True)
        for sample in samples
        if sample.get("variant") == "explicit"
    ]
    return implicit_records, explicit_records


def emit_plan(
    kind: RegimeKind,
    regime_output,
    out_dir: str | Path,
    seed: Optional[int] = None,
) -> CurriculumPlan:
    """Write the stage JSONL files plus plan.json under out_dir.

    EWRA orders stages implicit then explicit (one epoch each); ReverseEWRA
    swaps them; single-stage regimes train for two epochs so every plan
    totals two epochs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hyper = dict(PLAN_HYPERPARAMETERS)
    if seed is not None:
        hyper["seed"] = seed

    if kind in (RegimeKind.EWRA, RegimeKind.REVERSE_EWRA):
        implicit_records, explicit_records = regime_output
        write_jsonl(out_dir / "implicit.jsonl", (r.to_record() for r in implicit_records))
        write_jsonl(out_dir / "explicit.jsonl", (r.to_record() for r in explicit_records))
        stages = [
            CurriculumStage(path="implicit.jsonl", epochs=1, label="implicit"),
            CurriculumStage(path="explicit.jsonl", epochs=1, label="explicit"),
        ]
        if kind is RegimeKind.REVERSE_EWRA:
            stages = list(reversed(stages))
    else:
        records = regime_output
        write_jsonl(out_dir / "train.jsonl", (r.to_record() for r in records))
        stages = [CurriculumStage(path="train.jsonl", epochs=2, label=kind.value)]

    plan = CurriculumPlan(regime=kind, stages=stages, hyperparameters=hyper)
    plan.save(out_dir / "plan.json")
    return plan
