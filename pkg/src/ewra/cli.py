"""Subcommand front-end: ingest, curate, gen-align, build-curriculum,
evaluate, report.

Human-readable text goes to stdout; structured JSON logs go to stderr.
Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .align import (
    GenerationAborted,
    GenerationResult,
    build_session,
    generate,
    quarantine_to_record,
    sample_to_record,
)
from .config import Config, ConfigError
from .core import DEFAULT_TAXONOMY, EwraError, TaskKind, Taxonomy
from .curate import curate, load_gazetteer, sentence_from_record, sentence_to_record
from .curriculum import RegimeKind, SplitSpec, build_regime, emit_plan, split
from .events import default_events, find_event, load_events
from .ingest import (
    DEFAULT_KEYWORD_BANK,
    KeywordBank,
    article_to_record,
    run_ingest,
)
from .jsonl import read_jsonl, write_jsonl
from .metrics import (
    EmbeddingClient,
    EmbeddingConfig,
    EvalRecord,
    EvaluationError,
    evaluate,
)
from .prompts import PromptVariant
from .report import ReportError, build_report, render_html, validate_report

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

logger = logging.getLogger(__name__)


class UsageError(EwraError):
    """Bad arguments or unknown identifiers; maps to exit code 2."""


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created)),
            "level": record.levelname.lower(),
            "logger": record.name,
            "event": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


def _setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLineFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def _write_json(path: Path, data: dict) -> None:
    path.write_text(
        json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> Config:
    return Config.load(getattr(args, "config", None))


def _load_taxonomy(config: Config) -> Taxonomy:
    if config.taxonomy_path:
        return Taxonomy.load(config.taxonomy_path)
    return DEFAULT_TAXONOMY


def _registry(args, config: Config):
    path = getattr(args, "events", None) or config.events_path
    return load_events(path) if path else default_events()


def _select_events(args, config: Config):
    events = _registry(args, config)
    if getattr(args, "all", False):
        return events
    if not getattr(args, "event", None):
        raise UsageError("pass --event <id> or --all")
    event = find_event(events, args.event)
    if event is None:
        known = ", ".join(e.id for e in events)
        raise UsageError(f"unknown event id {args.event!r}; known ids: {known}")
    return [event]


def _keyword_bank(config: Config) -> KeywordBank:
    if config.keyword_bank_path:
        data = json.loads(Path(config.keyword_bank_path).read_text(encoding="utf-8"))
        return KeywordBank.from_dict(data)
    return DEFAULT_KEYWORD_BANK


def cmd_ingest(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    events = _select_events(args, config)
    bank = _keyword_bank(config)
    options = config.ingest_options()
    if args.feed_base:
        options.feed_base = args.feed_base
    if args.window_days is not None:
        options.window_days = args.window_days
    if args.politeness_delay is not None:
        options.politeness_delay_s = args.politeness_delay
    session = build_session()

    total_kept = 0
    total_failures = 0
    for event in events:
        articles, summary = run_ingest(event, bank, options, session)
        path = out / f"articles_{event.id}.jsonl"
        write_jsonl(path, (article_to_record(a) for a in articles))
        _write_json(out / f"ingest_{event.id}_summary.json", summary.to_dict())
        total_kept += summary.kept
        total_failures += summary.feed_failures + summary.extraction_failures
        print(f"{event.id}: {len(articles)} articles -> {path}")
    if total_kept == 0 and total_failures > 0:
        raise EwraError("ingest failed: no articles retrieved for any event")
    return EXIT_OK


def cmd_curate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    gazetteer_path = args.gazetteer or config.gazetteer_path
    if not gazetteer_path:
        raise UsageError("pass --gazetteer or set gazetteer_path in the config")
    gazetteer = load_gazetteer(gazetteer_path)
    in_dir = Path(args.in_dir)

    for event in _select_events(args, config):
        articles_path = in_dir / f"articles_{event.id}.jsonl"
        if not articles_path.is_file():
            raise EwraError(f"missing corpus file {articles_path}; run ingest first")
        articles = read_jsonl(articles_path)
        if args.drop_undated:
            articles = [a for a in articles if a.get("published")]
        sentences, curation_report = curate(articles, gazetteer, event)
        path = out / f"sentences_{event.id}.jsonl"
        write_jsonl(path, (sentence_to_record(s) for s in sentences))
        summary = {"event": event.id, **curation_report.to_dict()}
        _write_json(out / f"curate_{event.id}_summary.json", summary)
        print(
            f"{event.id}: kept {curation_report.kept}/{curation_report.segmented} "
            f"sentences -> {path}"
        )
    return EXIT_OK


def cmd_gen_align(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    taxonomy = _load_taxonomy(config)
    task = TaskKind(args.task)
    variant = PromptVariant(args.variant)
    if args.endpoint:
        config.llm_endpoint = args.endpoint
    if args.model:
        config.llm_model = args.model
    gen_cfg = config.generator_config()

    sentences = [sentence_from_record(r) for r in read_jsonl(args.sentences)]
    if args.limit is not None:
        sentences = sentences[: args.limit]

    collected: dict[int, tuple[str, object]] = {}

    def on_result(index: int, kind: str, payload) -> None:
        collected[index] = (kind, payload)

    aborted: Optional[str] = None
    try:
        result = generate(
            sentences, task, variant, gen_cfg, taxonomy=taxonomy, on_result=on_result
        )
    except (GenerationAborted, KeyboardInterrupt) as exc:
        # flush whatever finished, in input order
        slots = [collected[i] for i in sorted(collected)]
        result = GenerationResult(
            samples=[p for k, p in slots if k == "sample"],
            quarantined=[p for k, p in slots if k == "quarantine"],
        )
        aborted = "interrupted" if isinstance(exc, KeyboardInterrupt) else str(exc)
        logger.error("generation aborted, persisting partial results: %s", aborted)

    stem = f"{task.value}_{variant.value}"
    samples_path = out / f"align_{stem}.jsonl"
    quarantine_path = out / f"quarantine_{stem}.jsonl"
    write_jsonl(samples_path, (sample_to_record(s) for s in result.samples))
    write_jsonl(quarantine_path, (quarantine_to_record(q) for q in result.quarantined))
    summary = {
        "task": task.value,
        "variant": variant.value,
        "inputs": len(sentences),
        "samples": len(result.samples),
        "quarantined": len(result.quarantined),
        "repaired": sum(1 for s in result.samples if s.flags),
        "aborted": aborted,
    }
    _write_json(out / f"align_{stem}_summary.json", summary)
    print(
        f"{stem}: {len(result.samples)} samples, {len(result.quarantined)} "
        f"quarantined -> {samples_path}"
    )
    return EXIT_RUNTIME if aborted else EXIT_OK


def cmd_build_curriculum(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    samples: list[dict] = []
    for path in args.align:
        samples.extend(read_jsonl(path))
    if not samples:
        raise EwraError("no alignment samples in the given files")

    spec = config.split_spec()
    if args.seed is not None:
        spec = SplitSpec(
            train_frac=spec.train_frac,
            val_frac=spec.val_frac,
            test_frac=spec.test_frac,
            seed=args.seed,
        )
    train, val, test = split(samples, spec)
    splits_dir = out / "splits"
    splits_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(splits_dir / "train.jsonl", train)
    write_jsonl(splits_dir / "val.jsonl", val)
    write_jsonl(splits_dir / "test.jsonl", test)

    regime = RegimeKind(args.regime)
    records = build_regime(train, regime)
    plan = emit_plan(regime, records, out / regime.value, seed=spec.seed)

    summary = {
        "regime": regime.value,
        "inputs": len(samples),
        "train": len(train),
        "val": len(val),
        "test": len(test),
        "stages": [stage.to_dict() for stage in plan.stages],
        "total_epochs": plan.total_epochs,
        "seed": spec.seed,
    }
    _write_json(out / f"curriculum_{regime.value}_summary.json", summary)
    stages = " -> ".join(f"{s.label} x{s.epochs}" for s in plan.stages)
    print(f"{regime.value}: splits {len(train)}/{len(val)}/{len(test)}, stages {stages}")
    print(f"plan -> {out / regime.value / 'plan.json'}")
    return EXIT_OK


def _filter_task(records: list[dict], task: TaskKind, where: str) -> list[dict]:
    kept = [r for r in records if r.get("task", task.value) == task.value]
    if not kept:
        raise EwraError(f"{where}: no records for task {task.value!r}")
    return kept


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    taxonomy = _load_taxonomy(config)
    task = TaskKind(args.task)

    golds_raw = _filter_task(read_jsonl(args.gold), task, args.gold)
    preds_raw = _filter_task(read_jsonl(args.pred), task, args.pred)
    golds = [
        EvalRecord.from_record(r, where=f"{args.gold}[{i}]")
        for i, r in enumerate(golds_raw)
    ]
    preds = [
        EvalRecord.from_record(r, where=f"{args.pred}[{i}]")
        for i, r in enumerate(preds_raw)
    ]

    embed_client = None
    if args.embed_endpoint:
        embed_client = EmbeddingClient(EmbeddingConfig(endpoint=args.embed_endpoint))
    elif config.embedding_config() is not None:
        embed_client = EmbeddingClient(config.embedding_config())

    task_report = evaluate(
        preds,
        golds,
        task,
        taxonomy=taxonomy,
        embed_client=embed_client,
        include_degenerate=not args.exclude_degenerate,
    )
    _write_json(out / f"evaluate_{task.value}_summary.json", task_report.to_dict())
    write_jsonl(out / f"evaluate_{task.value}_samples.jsonl", task_report.per_sample)
    if task_report.src_pair is not None:
        src_text = f"{task_report.src_pair[0]:.4f}/{task_report.src_pair[1]:.4f}"
    else:
        src_text = f"{task_report.src_mean:.4f}"
    print(
        f"{task.value}: src={src_text} jaccard={task_report.jaccard_mean:.4f} "
        f"evaluated={task_report.n_evaluated} skipped={task_report.n_skipped}"
    )
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.in_dir)
    report = build_report(run_dir)
    validate_report(report)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        path = out / "report.json"
        _write_json(path, report)
    else:
        path = out / "report.html"
        path.write_text(render_html(report), encoding="utf-8")
    print(f"report -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewra",
        description="Extreme-weather news corpora, alignment data, curriculum "
        "datasets, and ranking-based evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--log-level", default="info", help="stderr log level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch per-event article corpora from news feeds")
    p.add_argument("--config")
    p.add_argument("--events", help="JSON event registry (default: built-in)")
    p.add_argument("--event", help="event id")
    p.add_argument("--all", action="store_true", help="ingest every registered event")
    p.add_argument("--out", required=True)
    p.add_argument("--feed-base", help="override the RSS endpoint base URL")
    p.add_argument("--window-days", type=int, default=None)
    p.add_argument("--politeness-delay", type=float, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("curate", help="segment, filter, and geo-match sentences")
    p.add_argument("--config")
    p.add_argument("--events")
    p.add_argument("--event")
    p.add_argument("--all", action="store_true")
    p.add_argument("--in", dest="in_dir", required=True, help="dir with articles_<event>.jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--gazetteer", help="tab-separated gazetteer file")
    p.add_argument(
        "--drop-undated",
        action="store_true",
        help="drop articles with unknown publish date instead of keeping them flagged",
    )
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("gen-align", help="generate reasoning-annotated alignment data")
    p.add_argument("--config")
    p.add_argument("--task", required=True, choices=[t.value for t in TaskKind])
    p.add_argument(
        "--variant", required=True, choices=[v.value for v in PromptVariant]
    )
    p.add_argument("--sentences", required=True, help="curated sentences JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", help="chat-completions endpoint URL")
    p.add_argument("--model")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_gen_align)

    p = sub.add_parser("build-curriculum", help="split data and emit regime datasets + plan")
    p.add_argument("--config")
    p.add_argument("--regime", required=True, choices=[r.value for r in RegimeKind])
    p.add_argument(
        "--align",
        required=True,
        action="append",
        help="alignment JSONL file (repeatable)",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_build_curriculum)

    p = sub.add_parser("evaluate", help="score predictions against a gold set")
    p.add_argument("--config")
    p.add_argument("--task", required=True, choices=[t.value for t in TaskKind])
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embed-endpoint", help="optional embeddings endpoint")
    p.add_argument(
        "--exclude-degenerate",
        action="store_true",
        help="exclude zero-variance samples from the SRC mean instead of scoring them 0",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="consolidate stage summaries into one report")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "html"], default="json")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EwraError, EvaluationError, ReportError) as exc:
        logger.error("command failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
