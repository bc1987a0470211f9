"""Synonym-classifier sidecar: fine-tune a small BERT on corpus JSONL files
and serve pair scores over the HTTP wire protocol."""

__version__ = "0.1.0"
