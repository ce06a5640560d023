"""ewra-train: execute a curriculum plan at toy scale."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .data import DataError
from .lora import UnsupportedModelError
from .runner import PlanError, TrainerOverrides, load_plan, run_plan


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewra-train",
        description="Run a curriculum plan with query/key-only adapter updates "
        "on a small byte-level causal LM.",
    )
    parser.add_argument("--plan", required=True, help="plan.json emitted upstream")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument(
        "--max-seq-len", type=int, default=256,
        help="byte-token budget per example (reduced for CPU runs)",
    )
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--limit", type=int, default=None, help="cap records per stage")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        plan = load_plan(args.plan)
        overrides = TrainerOverrides(
            batch_size=args.batch_size,
            max_seq_len=args.max_seq_len,
            device=args.device,
            limit=args.limit,
        )
        _, results = run_plan(plan, overrides, out_dir=args.out)
    except (PlanError, DataError, UnsupportedModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"regime {plan.regime}: {len(results)} stage(s)")
    for result in results:
        print(
            f"  {result.label}: steps={result.steps} "
            f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f} "
            f"({result.wall_time_s:.1f}s)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
