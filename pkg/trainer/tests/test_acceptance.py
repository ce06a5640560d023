"""Acceptance gate for the trainer: the toy two-stage curriculum run."""

from __future__ import annotations

import time

import pytest

from ewra_trainer.lora import audit_trainable_parameters
from ewra_trainer.runner import TrainerOverrides, load_plan, run_plan

from conftest import write_plan

pytestmark = pytest.mark.acceptance


def test_toy_curriculum_run(tmp_path):
    """100-record implicit + 100-record explicit stages on a sub-0.5B model:
    trainable parameters are exclusively q/k adapters (name audit), loss
    strictly decreases within each stage, stages execute in plan order, and
    the whole run stays far under the 15-minute budget."""
    plan_path = write_plan(
        tmp_path,
        [("implicit", 1, 100), ("explicit", 1, 100)],
        regime="ewra",
    )
    plan = load_plan(plan_path)

    started = time.monotonic()
    model, results = run_plan(
        plan,
        TrainerOverrides(batch_size=8, max_seq_len=192),
        out_dir=tmp_path / "out",
    )
    elapsed = time.monotonic() - started

    # sub-0.5B model
    assert model.parameter_count() < 500_000_000

    # name audit: every trainable parameter is a q/k adapter tensor
    trainable = audit_trainable_parameters(model)
    assert trainable
    assert all(("q_proj" in n or "k_proj" in n) and "lora_" in n for n in trainable)

    # plan order preserved
    assert [r.label for r in results] == ["implicit", "explicit"]

    # loss strictly decreases within each stage (eval before vs after)
    for result in results:
        assert result.final_loss < result.initial_loss, (
            result.label, result.initial_loss, result.final_loss,
        )
        assert result.steps == 13  # 100 records / batch 8

    assert elapsed < 900, f"toy run took {elapsed:.0f}s"
