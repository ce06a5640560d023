"""Plan loading and stage execution: next-token cross-entropy on target
tokens only, optimizer state persisting across stages unless the plan says
otherwise."""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch
from torch import nn

from .data import IGNORE_INDEX, batches, collate, encode_example, load_records
from .lora import adapter_state_dict, apply_qk_adapters, audit_trainable_parameters
from .model import ByteTokenizer, ModelConfig, TinyCausalLM

REQUIRED_HYPERPARAMETERS = (
    "learning_rate", "lora_rank", "lora_alpha", "effective_batch",
    "qk_only", "seed", "max_seq_len",
)


class PlanError(RuntimeError):
    """Plan file violates its schema; the message names the field path."""


@dataclass
class PlanStage:
    path: Path
    epochs: int
    label: str


@dataclass
class Plan:
    regime: str
    stages: list[PlanStage]
    hyperparameters: dict

    @property
    def reset_optimizer(self) -> bool:
        return bool(self.hyperparameters.get("reset_optimizer", False))


def load_plan(path: str | Path) -> Plan:
    """Load and validate plan.json; stage paths resolve relative to it."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"{path}: cannot load plan ({exc})") from exc
    if not isinstance(data, dict):
        raise PlanError(f"{path}: plan must be a JSON object")
    if not isinstance(data.get("regime"), str):
        raise PlanError("regime: must be a string")
    raw_stages = data.get("stages")
    if not isinstance(raw_stages, list) or not raw_stages:
        raise PlanError("stages: must be a nonempty list")
    hyper = data.get("hyperparameters")
    if not isinstance(hyper, dict):
        raise PlanError("hyperparameters: must be an object")
    for key in REQUIRED_HYPERPARAMETERS:
        if key not in hyper:
            raise PlanError(f"hyperparameters.{key}: missing")
    if not hyper.get("qk_only", False):
        raise PlanError("hyperparameters.qk_only: this trainer only supports true")

    stages = []
    for i, raw in enumerate(raw_stages):
        where = f"stages[{i}]"
        if not isinstance(raw, dict):
            raise PlanError(f"{where}: must be an object")
        for key, kind in (("path", str), ("epochs", int), ("label", str)):
            if not isinstance(raw.get(key), kind):
                raise PlanError(f"{where}.{key}: missing or not {kind.__name__}")
        if raw["epochs"] <= 0:
            raise PlanError(f"{where}.epochs: must be positive")
        stage_path = (path.parent / raw["path"]).resolve()
        if not stage_path.is_file():
            raise PlanError(f"{where}.path: no such dataset file {stage_path}")
        stages.append(PlanStage(path=stage_path, epochs=raw["epochs"], label=raw["label"]))
    return Plan(regime=data["regime"], stages=stages, hyperparameters=hyper)


@dataclass
class StageResult:
    label: str
    steps: int
    initial_loss: float
    final_loss: float
    epoch_losses: list[float]
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "steps": self.steps,
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "epoch_losses": list(self.epoch_losses),
            "wall_time_s": self.wall_time_s,
        }


@dataclass
class TrainerOverrides:
    """Toy-scale knobs; plan hyperparameters win unless overridden here."""

    batch_size: int = 8
    max_seq_len: Optional[int] = None  # None -> plan value
    device: str = "cpu"
    limit: Optional[int] = None  # cap records per stage
    model_config: ModelConfig = field(default_factory=ModelConfig)


def _loss_on_batch(model: nn.Module, input_ids: torch.Tensor, labels: torch.Tensor):
    logits = model(input_ids)
    return nn.functional.cross_entropy(
        logits[:, :-1, :].reshape(-1, logits.shape[-1]),
        labels[:, 1:].reshape(-1),
        ignore_index=IGNORE_INDEX,
    )


@torch.no_grad()
def evaluate_loss(model: nn.Module, examples, batch_size: int, device: str) -> float:
    """Mean target-token cross-entropy over a dataset (no updates)."""
    model.eval()
    total, count = 0.0, 0
    for start in range(0, len(examples), batch_size):
        input_ids, labels = collate(examples[start : start + batch_size])
        loss = _loss_on_batch(model, input_ids.to(device), labels.to(device))
        n_targets = int((labels[:, 1:] != IGNORE_INDEX).sum())
        total += float(loss) * n_targets
        count += n_targets
    model.train()
    return total / max(count, 1)


def run_plan(
    plan: Plan,
    overrides: TrainerOverrides = TrainerOverrides(),
    out_dir: Optional[str | Path] = None,
    model: Optional[nn.Module] = None,
) -> tuple[nn.Module, list[StageResult]]:
    """Execute every stage in plan order.

    initial_loss/final_loss are full-dataset evaluations taken before and
    after the stage's updates; per-epoch training means land in
    epoch_losses. NaN losses abort with the step index.
    """
    hyper = plan.hyperparameters
    seed = int(hyper["seed"])
    torch.manual_seed(seed)
    random.seed(seed)

    max_seq_len = overrides.max_seq_len or int(hyper["max_seq_len"])
    model_config = overrides.model_config
    if max_seq_len > model_config.max_seq_len:
        raise PlanError(
            f"max_seq_len {max_seq_len} exceeds the toy model's "
            f"{model_config.max_seq_len}"
        )
    device = overrides.device
    if model is None:
        model = TinyCausalLM(model_config)
    model.to(device)
    model.train()

    report = apply_qk_adapters(
        model, rank=int(hyper["lora_rank"]), alpha=float(hyper["lora_alpha"])
    )
    audit_trainable_parameters(model)

    tokenizer = ByteTokenizer()
    lr = float(hyper["learning_rate"])
    weight_decay = float(hyper.get("weight_decay", 0.01))
    warmup_steps = 5

    def make_optimizer():
        return torch.optim.AdamW(
            (p for p in model.parameters() if p.requires_grad),
            lr=lr,
            weight_decay=weight_decay,
        )

    # one schedule across the whole plan when optimizer state persists
    stage_examples = []
    for stage in plan.stages:
        records = load_records(stage.path)
        if overrides.limit is not None:
            records = records[: overrides.limit]
        stage_examples.append(
            [encode_example(r, tokenizer, max_seq_len) for r in records]
        )
    steps_per_stage = [
        stage.epochs * ((len(examples) + overrides.batch_size - 1) // overrides.batch_size)
        for stage, examples in zip(plan.stages, stage_examples)
    ]
    total_steps = sum(steps_per_stage)

    def make_scheduler(optimizer, horizon):
        def lr_lambda(step):
            if step < warmup_steps:
                return (step + 1) / warmup_steps
            remaining = max(horizon - warmup_steps, 1)
            return max(0.0, (horizon - step) / remaining)

        return torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)

    optimizer = make_optimizer()
    scheduler = make_scheduler(optimizer, total_steps)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "adapter_report.json").write_text(
            json.dumps(
                {
                    "adapted_modules": report.adapted_modules,
                    "trainable_names": report.trainable_names,
                    "trainable_params": report.trainable_params,
                    "total_params": report.total_params,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )

    results: list[StageResult] = []
    global_step = 0
    for stage_index, (stage, examples) in enumerate(zip(plan.stages, stage_examples)):
        if plan.reset_optimizer and stage_index > 0:
            optimizer = make_optimizer()
            scheduler = make_scheduler(optimizer, steps_per_stage[stage_index])
        started = time.monotonic()
        initial_loss = evaluate_loss(model, examples, overrides.batch_size, device)
        epoch_losses = []
        steps = 0
        for epoch in range(stage.epochs):
            epoch_total, epoch_batches = 0.0, 0
            for input_ids, labels in batches(
                examples, overrides.batch_size, seed=seed, epoch=epoch
            ):
                loss = _loss_on_batch(model, input_ids.to(device), labels.to(device))
                if torch.isnan(loss):
                    raise RuntimeError(
                        f"NaN loss at stage {stage.label!r} step {global_step}"
                    )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                scheduler.step()
                epoch_total += float(loss.detach())
                epoch_batches += 1
                steps += 1
                global_step += 1
            epoch_losses.append(epoch_total / max(epoch_batches, 1))
        final_loss = evaluate_loss(model, examples, overrides.batch_size, device)
        result = StageResult(
            label=stage.label,
            steps=steps,
            initial_loss=initial_loss,
            final_loss=final_loss,
            epoch_losses=epoch_losses,
            wall_time_s=time.monotonic() - started,
        )
        results.append(result)
        if out_path is not None:
            torch.save(
                adapter_state_dict(model),
                out_path / f"adapters_stage{stage_index}_{stage.label}.pt",
            )

    if out_path is not None:
        (out_path / "stage_results.json").write_text(
            json.dumps([r.to_dict() for r in results], indent=2) + "\n",
            encoding="utf-8",
        )
    return model, results
