"""Helpers for trainer tests: plan/dataset builders mirroring the upstream
file interface, plus acceptance-line reporting."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

DEFAULT_HYPERPARAMETERS = {
    "learning_rate": 2e-4,
    "lora_rank": 16,
    "lora_alpha": 16,
    "effective_batch": 64,
    "qk_only": True,
    "seed": 3407,
    "max_seq_len": 2048,
    "reset_optimizer": False,
}

OUTPUT_BLOCKS = [
    "<output>\nFinal Output:\n- Vulnerability: 0.4\n- Impact: 0.1\n- Emergency: 0.5\n- Others: 0\n</output>",
    "<output>\nFinal Output:\n- Vulnerability: 0.1\n- Impact: 0.6\n- Emergency: 0.2\n- Others: 0.1\n</output>",
    "<output>\nFinal Output:\n- Vulnerability: 0.7\n- Impact: 0\n- Emergency: 0.3\n- Others: 0\n</output>",
    "<output>\nFinal Output:\n- Vulnerability: 0\n- Impact: 0.2\n- Emergency: 0.1\n- Others: 0.7\n</output>",
]

THINK_LINES = [
    "The sentence reports measurable damage to homes and roads.",
    "Officials are responding, so the emergency reading dominates.",
    "A warning about hazardous conditions points at vulnerability.",
    "No concrete markers appear, leaving the catch-all category.",
]


def make_records(n: int, variant: str) -> list[dict]:
    records = []
    for i in range(n):
        sentence = f"Storm {i} swept through district {i % 7}, flooding streets."
        definitions = (
            "\n[Definitions of Categories]\nVulnerability: warnings. Impact: damage. "
            "Emergency: response. Others: the rest."
            if variant == "explicit"
            else ""
        )
        instruction = (
            f'[Task Description:]\nGiven the sentence: "{sentence}", assign a '
            f"probability to each category, summing to 1.{definitions}"
        )
        target = (
            f"<think>\n{THINK_LINES[i % len(THINK_LINES)]}\n</think>\n"
            f"{OUTPUT_BLOCKS[i % len(OUTPUT_BLOCKS)]}"
        )
        records.append({"instruction": instruction, "input": sentence, "output": target})
    return records


def write_stage(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_plan(
    out_dir: Path,
    stages: list[tuple[str, int, int]],
    regime: str = "ewra",
    hyper_overrides: dict | None = None,
) -> Path:
    """stages: (label, epochs, n_records) triples; writes JSONLs + plan.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_stages = []
    for label, epochs, n_records in stages:
        variant = label if label in ("explicit", "implicit") else "explicit"
        write_stage(out_dir / f"{label}.jsonl", make_records(n_records, variant))
        plan_stages.append({"path": f"{label}.jsonl", "epochs": epochs, "label": label})
    hyper = dict(DEFAULT_HYPERPARAMETERS)
    if hyper_overrides:
        hyper.update(hyper_overrides)
    plan_path = out_dir / "plan.json"
    plan_path.write_text(
        json.dumps({"regime": regime, "stages": plan_stages, "hyperparameters": hyper}),
        encoding="utf-8",
    )
    return plan_path


@pytest.fixture()
def ewra_plan_path(tmp_path) -> Path:
    return write_plan(
        tmp_path, [("implicit", 1, 24), ("explicit", 1, 24)], regime="ewra"
    )


_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "acceptance" in report.keywords:
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}: {nodeid.split('::')[-1]}")
