#!/usr/bin/env python3
"""Run the whole pipeline end to end against local mock servers.

Spins up a fake news site (RSS + article pages), a scripted chat-completions
endpoint, and an embeddings endpoint, then drives the real CLI through
ingest -> curate -> gen-align -> build-curriculum -> evaluate -> report.
Everything lands under --out (default ./demo_run).

    python scripts/run_pipeline_demo.py --out demo_run
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "tests"))

from ewra.cli import main as ewra_main
from ewra.jsonl import read_jsonl, write_jsonl
from mockserver import (
    MockHTTPServer,
    SimpleResponse,
    make_embedding_handler,
    make_multitask_chat_handler,
)

FIXTURES = REPO / "tests" / "fixtures"


def run(argv: list[str]) -> None:
    print(f"$ ewra {' '.join(argv)}")
    code = ewra_main(argv)
    if code != 0:
        raise SystemExit(f"command failed with exit code {code}")


def make_site_handler(server_ref: dict):
    feed_xml = (FIXTURES / "feeds" / "feed_3items.xml").read_text(encoding="utf-8")
    page = (FIXTURES / "pages" / "page_article.html").read_bytes()

    def handler(request):
        if request.path == "/rss/search":
            xml = feed_xml.replace(
                "https://news.example.com/articles", f"{server_ref['url']}/articles"
            )
            return SimpleResponse(body=xml.encode(), content_type="application/xml")
        if request.path.startswith("/articles/"):
            return SimpleResponse(body=page, content_type="text/html")
        return SimpleResponse(status=404, body=b"")

    return handler


def align_to_gold(align_path: Path, gold_path: Path) -> None:
    """Reuse generated samples as a stand-in gold set for the demo."""
    records = []
    for sample in read_jsonl(align_path):
        records.append(
            {
                "id": sample["id"],
                "sentence": sample["sentence"],
                "task": sample["task"],
                "distributions": sample["distributions"],
                "keywords": sample["keywords"],
                "explanation": sample["think"],
            }
        )
    write_jsonl(gold_path, records)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_run")
    parser.add_argument("--keep", action="store_true", help="keep an existing out dir")
    args = parser.parse_args()

    out = Path(args.out)
    if out.exists() and not args.keep:
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)

    registry = out / "events.json"
    registry.write_text(
        json.dumps(
            [
                {
                    "name": "Typhoon Yagi",
                    "event_type": "wind",
                    "country": "Vietnam",
                    "event_date": "2024-09-08",
                }
            ]
        ),
        encoding="utf-8",
    )
    config = out / "config.json"
    config.write_text(json.dumps({"backoff_base": 0.05, "request_timeout": 10.0}))

    server_ref: dict = {}
    site = MockHTTPServer(make_site_handler(server_ref))
    chat = MockHTTPServer(make_multitask_chat_handler())
    embed = MockHTTPServer(make_embedding_handler())
    with site, chat, embed:
        server_ref["url"] = site.url
        print(f"mock site at {site.url}, chat at {chat.url}, embeddings at {embed.url}\n")

        run(
            ["ingest", "--events", str(registry), "--event", "typhoon-yagi",
             "--out", str(out), "--feed-base", f"{site.url}/rss/search",
             "--politeness-delay", "0"]
        )
        run(
            ["curate", "--events", str(registry), "--event", "typhoon-yagi",
             "--in", str(out), "--out", str(out),
             "--gazetteer", str(FIXTURES / "gazetteer_200.tsv")]
        )
        sentences = out / "sentences_typhoon-yagi.jsonl"
        for task in ("vie", "topic", "emotion"):
            for variant in ("explicit", "implicit"):
                run(
                    ["gen-align", "--config", str(config), "--task", task,
                     "--variant", variant, "--sentences", str(sentences),
                     "--out", str(out), "--endpoint", chat.url]
                )
        for regime in ("ewra", "reverse-ewra", "direct"):
            align_args = []
            for variant in ("explicit", "implicit"):
                for task in ("vie", "topic", "emotion"):
                    align_args += ["--align", str(out / f"align_{task}_{variant}.jsonl")]
            run(
                ["build-curriculum", "--regime", regime, *align_args,
                 "--out", str(out / "curriculum")]
            )
        # stand-in gold sets derived from the explicit samples
        for task in ("vie", "topic", "emotion"):
            gold = out / f"gold_{task}.jsonl"
            align_to_gold(out / f"align_{task}_explicit.jsonl", gold)
            run(
                ["evaluate", "--task", task, "--gold", str(gold), "--pred", str(gold),
                 "--out", str(out), "--embed-endpoint", embed.url]
            )
        # copy the curriculum summaries next to the rest so the report sees them
        for summary in (out / "curriculum").glob("curriculum_*_summary.json"):
            shutil.copy(summary, out / summary.name)
        run(["report", "--in", str(out), "--format", "json"])
        run(["report", "--in", str(out), "--format", "html"])

    plan = out / "curriculum" / "ewra" / "plan.json"
    print("\ndemo complete; artifacts:")
    for path in sorted(out.rglob("*")):
        if path.is_file():
            print(f"  {path}")
    print(
        f"\nnext: train the toy model on the emitted plan:\n"
        f"  ewra-train --plan {plan} --out {out}/training --max-seq-len 256"
    )


if __name__ == "__main__":
    main()
