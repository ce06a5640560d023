"""Extreme-weather news corpora, alignment-data generation, curriculum
datasets, and ranking-based evaluation."""

__version__ = "0.1.0"
