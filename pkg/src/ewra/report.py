"""Consolidated run reports: JSON document plus a static HTML summary."""

from __future__ import annotations

import html
import json
from pathlib import Path

from .core import EwraError

STAGES = ("ingest", "curate", "align", "curriculum", "evaluate")

TASK_TITLES = {
    "vie": "Vulnerability / Impact / Emergency Assessment",
    "topic": "Topic / Subtopic Labeling and Keyword Extraction",
    "emotion": "Emotion Analysis",
}


class ReportError(EwraError):
    """Raised when a run directory holds no usable stage summaries."""


def collect_summaries(run_dir: str | Path) -> dict:
    """Gather ``<stage>_*_summary.json`` files from a run directory.

    Returns {"stages": {stage: {filename: summary}}, "missing_stages": [...]}.
    Raises ReportError when nothing at all is found.
    """
    run_dir = Path(run_dir)
    stages: dict[str, dict[str, dict]] = {}
    for path in sorted(run_dir.glob("*_summary.json")):
        stage = path.name.split("_", 1)[0]
        if stage not in STAGES:
            continue
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ReportError(f"{path}: unreadable summary ({exc})") from exc
        stages.setdefault(stage, {})[path.name] = data
    missing = [stage for stage in STAGES if stage not in stages]
    if not stages:
        raise ReportError(
            f"no stage summaries found in {run_dir}; missing: {', '.join(missing)}"
        )
    return {"stages": stages, "missing_stages": missing}


def build_report(run_dir: str | Path) -> dict:
    collected = collect_summaries(run_dir)
    tasks: dict[str, dict] = {}
    for summary in collected["stages"].get("evaluate", {}).values():
        task = summary.get("task")
        if task:
            tasks[task] = summary
    return {
        "run_dir": str(run_dir),
        "stages": collected["stages"],
        "missing_stages": collected["missing_stages"],
        "tasks": tasks,
    }


def validate_report(report: dict) -> None:
    """Minimal schema check for the JSON report."""
    for key, kind in (("run_dir", str), ("stages", dict), ("missing_stages", list), ("tasks", dict)):
        if key not in report or not isinstance(report[key], kind):
            raise ReportError(f"report missing or mistyped field {key!r}")
    for stage in report["stages"]:
        if stage not in STAGES:
            raise ReportError(f"report contains unknown stage {stage!r}")


def _metric_rows(summary: dict) -> str:
    labels = [
        ("src_mean", "Spearman rank correlation (mean)"),
        ("src_pair", "SRC topic/subtopic"),
        ("jaccard_mean", "Jaccard index (explanations)"),
        ("keyword_jaccard_mean", "Jaccard index (keywords)"),
        ("similarity_mean", "Embedding cosine (substitute, not BERTScore)"),
        ("n_evaluated", "Samples evaluated"),
        ("n_skipped", "Samples skipped (degenerate ranks)"),
    ]
    rows = []
    for key, label in labels:
        if key not in summary:
            continue
        value = summary[key]
        if isinstance(value, float):
            value = f"{value:.4f}"
        rows.append(
            f"<tr><td>{html.escape(label)}</td><td>{html.escape(str(value))}</td></tr>"
        )
    return "\n".join(rows)


def render_html(report: dict) -> str:
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'>",
        "<title>Pipeline run report</title>",
        "<style>body{font-family:sans-serif;margin:2em;}table{border-collapse:collapse;}"
        "td,th{border:1px solid #999;padding:4px 8px;}h2{margin-top:1.5em;}</style>",
        "</head><body>",
        "<h1>Pipeline run report</h1>",
        f"<p>Run directory: <code>{html.escape(report['run_dir'])}</code></p>",
    ]
    if report["missing_stages"]:
        missing = ", ".join(report["missing_stages"])
        parts.append(f"<p>Stages without summaries: {html.escape(missing)}</p>")

    for task, title in TASK_TITLES.items():
        summary = report["tasks"].get(task)
        if summary is None:
            continue
        parts.append(f"<section id='task-{task}'>")
        parts.append(f"<h2>{html.escape(title)}</h2>")
        parts.append(f"<table>{_metric_rows(summary)}</table>")
        parts.append("</section>")

    for stage, summaries in sorted(report["stages"].items()):
        if stage == "evaluate":
            continue
        parts.append(f"<section id='stage-{stage}'>")
        parts.append(f"<h2>Stage: {html.escape(stage)}</h2>")
        for name, summary in sorted(summaries.items()):
            pretty = html.escape(json.dumps(summary, indent=2, ensure_ascii=False))
            parts.append(f"<h3>{html.escape(name)}</h3><pre>{pretty}</pre>")
        parts.append("</section>")

    parts.append("</body></html>")
    return "\n".join(parts)
