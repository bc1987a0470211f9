"""Corpus JSONL loading and schema validation.

Each line is an object with required keys ``l`` and ``r`` (the two labels,
non-empty strings) and ``y`` (0 or 1), plus an optional ``origin`` string;
any other key is rejected so typos fail fast.
"""

import json
from dataclasses import dataclass

from synscorer.errors import CorpusFormatError

REQUIRED_KEYS = {"l", "r", "y"}
ALLOWED_KEYS = REQUIRED_KEYS | {"origin"}


@dataclass(frozen=True)
class Sample:
    left: str
    right: str
    label: int
    origin: str = ""


def _check_line(obj, path: str, lineno: int) -> Sample:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{path}:{lineno}: expected an object, got {type(obj).__name__}")
    missing = REQUIRED_KEYS - obj.keys()
    if missing:
        raise CorpusFormatError(f"{path}:{lineno}: missing key(s) {sorted(missing)}")
    unknown = obj.keys() - ALLOWED_KEYS
    if unknown:
        raise CorpusFormatError(f"{path}:{lineno}: unknown key(s) {sorted(unknown)}")
    left, right, label = obj["l"], obj["r"], obj["y"]
    if not isinstance(left, str) or not left:
        raise CorpusFormatError(f"{path}:{lineno}: 'l' must be a non-empty string")
    if not isinstance(right, str) or not right:
        raise CorpusFormatError(f"{path}:{lineno}: 'r' must be a non-empty string")
    if label not in (0, 1) or isinstance(label, bool):
        raise CorpusFormatError(f"{path}:{lineno}: 'y' must be 0 or 1, got {label!r}")
    origin = obj.get("origin", "")
    if not isinstance(origin, str):
        raise CorpusFormatError(f"{path}:{lineno}: 'origin' must be a string")
    return Sample(left, right, label, origin)


def load_corpus(path: str) -> list[Sample]:
    """Load and validate a corpus JSONL file; any violation raises before use."""
    samples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            samples.append(_check_line(obj, path, lineno))
    if not samples:
        raise CorpusFormatError(f"{path}: corpus file contains no samples")
    return samples
