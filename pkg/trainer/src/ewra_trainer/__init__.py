"""Toy-scale curriculum trainer: consumes plan.json + instruction JSONL
stages and fine-tunes a small causal LM through query/key-only low-rank
adapters."""

__version__ = "0.1.0"
