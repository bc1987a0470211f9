"""Scoring of label sets for class equivalence.

Three interchangeable strategies produce a score in [0, 1] for a pair of
label sets: exact label overlap, maximum normalized edit similarity, and a
synonym classifier reached over HTTP.  The classifier path short-circuits to
1.0 when the label sets already share a member, so the expensive scorer is
only consulted for non-obvious pairs.  A deterministic in-process mock stands
in for the remote classifier in tests and offline runs.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
import time
from dataclasses import dataclass
from typing import Sequence

import requests

from ontomatch import _kernels
from ontomatch.errors import (
    ConfigError,
    ScorerProtocolError,
    ScorerTransportError,
    UndefinedScoreError,
)

log = logging.getLogger(__name__)

SCORER_KINDS = ("string-match", "edit-similarity", "remote-classifier", "mock")

RETRY_ATTEMPTS = 3
BACKOFF_BASE_S = 0.2


@dataclass
class ScorerConfig:
    kind: str = "string-match"
    endpoint: str | None = None
    batch_size: int = 32
    timeout_ms: int = 10_000
    max_inflight: int = 4

    def validate(self) -> None:
        problems = []
        if self.kind not in SCORER_KINDS:
            problems.append(f"scorer.kind must be one of {', '.join(SCORER_KINDS)}; got {self.kind!r}")
        if self.kind == "remote-classifier" and not self.endpoint:
            problems.append("scorer.endpoint is required when scorer.kind = remote-classifier")
        if self.kind != "remote-classifier" and self.endpoint:
            problems.append(f"scorer.endpoint is only meaningful for remote-classifier (kind = {self.kind})")
        if self.batch_size < 1:
            problems.append(f"scorer.batch_size must be >= 1; got {self.batch_size}")
        if self.timeout_ms < 1:
            problems.append(f"scorer.timeout_ms must be >= 1; got {self.timeout_ms}")
        if self.max_inflight < 1:
            problems.append(f"scorer.max_inflight must be >= 1; got {self.max_inflight}")
        if problems:
            raise ConfigError(problems)


class PairScorer:
    """Scores batches of (label, label) pairs; each score lies in [0, 1]."""

    name = "abstract"

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        raise NotImplementedError


class MockScorer(PairScorer):
    """Token-set Jaccard similarity over whitespace tokens.

    Deterministic and dependency-free, so the full pipeline can run without
    the classifier service.
    """

    name = "mock"

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        out = []
        for left, right in pairs:
            a, b = set(left.split()), set(right.split())
            if not a and not b:
                out.append(1.0)
            elif not a or not b:
                out.append(0.0)
            else:
                out.append(len(a & b) / len(a | b))
        return out


class RemoteScorer(PairScorer):
    """HTTP client for the synonym-classifier service.

    Transport failures are retried with exponential backoff; malformed
    responses are protocol errors and are not retried.  A semaphore bounds
    concurrent in-flight requests across worker threads.
    """

    name = "remote-classifier"

    def __init__(self, endpoint: str, timeout_ms: int = 10_000, max_inflight: int = 4,
                 backoff_base_s: float = BACKOFF_BASE_S):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_ms / 1000.0
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._backoff_base_s = backoff_base_s
        self._session = requests.Session()

    def health(self) -> str:
        """Probe GET /health; returns the served model name."""
        try:
            with self._gate:
                resp = self._session.get(f"{self.endpoint}/health", timeout=self.timeout_s)
        except requests.RequestException as e:
            raise ScorerTransportError(f"health check failed: {e}") from e
        if resp.status_code != 200:
            raise ScorerProtocolError(f"health check returned HTTP {resp.status_code}")
        body = self._json_object(resp)
        if body.get("status") != "ok":
            raise ScorerProtocolError(f"scorer unhealthy: {body!r}")
        return str(body.get("model", ""))

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        payload = {"pairs": [[left, right] for left, right in pairs]}
        resp = self._post_with_retry(payload)
        if resp.status_code != 200:
            raise ScorerProtocolError(f"scorer returned HTTP {resp.status_code}: {resp.text[:200]}")
        body = self._json_object(resp)
        scores = body.get("scores")
        if not isinstance(scores, list):
            raise ScorerProtocolError("response lacks a 'scores' array")
        if len(scores) != len(pairs):
            raise ScorerProtocolError(
                f"sent {len(pairs)} pairs but received {len(scores)} scores")
        out = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool) or not 0.0 <= s <= 1.0:
                raise ScorerProtocolError(f"score {s!r} is not a real in [0, 1]")
            out.append(float(s))
        return out

    def _post_with_retry(self, payload: dict) -> requests.Response:
        last: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            if attempt:
                delay = self._backoff_base_s * 2 ** (attempt - 1)
                log.debug("scorer retry %d after %.2fs", attempt, delay)
                time.sleep(delay)
            try:
                with self._gate:
                    return self._session.post(f"{self.endpoint}/score", json=payload,
                                              timeout=self.timeout_s)
            except requests.RequestException as e:
                last = e
        raise ScorerTransportError(
            f"scorer unreachable after {RETRY_ATTEMPTS} attempts: {last}") from last

    @staticmethod
    def _json_object(resp: requests.Response) -> dict:
        try:
            body = resp.json()
        except ValueError as e:
            raise ScorerProtocolError(f"response is not JSON: {resp.text[:200]}") from e
        if not isinstance(body, dict):
            raise ScorerProtocolError(f"expected a JSON object, got {type(body).__name__}")
        return body


def string_match_score(labels1: Sequence[str], labels2: Sequence[str]) -> float:
    """1.0 when the label sets share a member, else 0.0."""
    return 1.0 if set(labels1) & set(labels2) else 0.0


def edit_similarity_score(labels1: Sequence[str], labels2: Sequence[str]) -> float:
    """Maximum normalized edit similarity over all label pairs."""
    if not labels1 or not labels2:
        raise UndefinedScoreError("edit similarity of an empty label set")
    best = 0.0
    encoded2 = [(_kernels.codepoints(r), len(r)) for r in labels2]
    for left in labels1:
        a = _kernels.codepoints(left)
        for b, len_r in encoded2:
            denom = max(len(left), len_r)
            if denom == 0:
                sim = 1.0  # two empty strings are identical
            else:
                sim = 1.0 - _kernels.edit_distance(a, b) / denom
            if sim > best:
                best = sim
                if best == 1.0:
                    return 1.0
    return best


def classifier_score(scorer: PairScorer, labels1: Sequence[str], labels2: Sequence[str],
                     batch_size: int = 32) -> float:
    """Mean synonym score over all ordered label pairs, computed in batches.

    The mean uses an exactly rounded sum, so the result does not depend on
    batch partitioning or pair enumeration order.
    """
    if not labels1 or not labels2:
        raise UndefinedScoreError("classifier score of an empty label set")
    pairs = list(itertools.product(labels1, labels2))
    scores: list[float] = []
    for start in range(0, len(pairs), batch_size):
        scores.extend(scorer.score_batch(pairs[start:start + batch_size]))
    return math.fsum(scores) / len(scores)


def map_score(scorer: PairScorer, labels1: Sequence[str], labels2: Sequence[str],
              batch_size: int = 32) -> float:
    """Equivalence score: 1.0 on shared labels, otherwise the classifier mean.

    The short-circuit means the scorer is never invoked for pairs that
    already match exactly.
    """
    if set(labels1) & set(labels2):
        return 1.0
    return classifier_score(scorer, labels1, labels2, batch_size)


class MappingScorer:
    """Facade turning a ScorerConfig into a label-set scoring function."""

    def __init__(self, config: ScorerConfig):
        config.validate()
        self.config = config
        self._pair_scorer: PairScorer | None = None
        if config.kind == "mock":
            self._pair_scorer = MockScorer()
        elif config.kind == "remote-classifier":
            assert config.endpoint is not None
            self._pair_scorer = RemoteScorer(config.endpoint, config.timeout_ms,
                                             config.max_inflight)

    @property
    def name(self) -> str:
        return self.config.kind

    def health_check(self) -> str | None:
        """For the remote kind, probe the service; otherwise a no-op."""
        if isinstance(self._pair_scorer, RemoteScorer):
            return self._pair_scorer.health()
        return None

    def score(self, labels1: Sequence[str], labels2: Sequence[str]) -> float:
        return self.score_detailed(labels1, labels2)[0]

    def score_detailed(self, labels1: Sequence[str], labels2: Sequence[str]) -> tuple[float, bool]:
        """Score plus whether the label-set intersection short-circuit fired.

        The flag is only meaningful for classifier-backed kinds, where a hit
        means the pair scorer was not consulted.
        """
        kind = self.config.kind
        if kind == "string-match":
            return string_match_score(labels1, labels2), False
        if kind == "edit-similarity":
            return edit_similarity_score(labels1, labels2), False
        assert self._pair_scorer is not None
        if set(labels1) & set(labels2):
            return 1.0, True
        return classifier_score(self._pair_scorer, labels1, labels2,
                                self.config.batch_size), False
