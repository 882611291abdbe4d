"""Bundled synthetic corpus: scene documents, queries, cases and a baseline ranking."""

from pathlib import Path

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"
QUERIES = CORPUS_DIR / "queries.jsonl"
CASES = CORPUS_DIR / "cases.jsonl"
BASELINE = CORPUS_DIR / "baseline.jsonl"
