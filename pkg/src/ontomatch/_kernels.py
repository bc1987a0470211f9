"""Numeric hot paths: edit-distance DP and inverted-index score accumulation.

Both kernels have a numba-jitted implementation and a pure-numpy fallback.
Set ``ONTOMATCH_NO_NUMBA=1`` to force the fallback (or it is used
automatically when numba is not importable).  The two implementations are
kept bit-identical: accumulation order over query tokens is the caller's
token order in both, so floating-point sums agree exactly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("ONTOMATCH_NO_NUMBA", "") != "1"


def codepoints(s: str) -> np.ndarray:
    """Encode a string as a uint32 codepoint array (kernel input format)."""
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


# ---------------------------------------------------------------------------
# Levenshtein distance
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _edit_distance_nb(a: np.ndarray, b: np.ndarray) -> int:
        n = b.shape[0]
        prev = np.arange(n + 1)
        cur = np.empty(n + 1, dtype=np.int64)
        for i in range(1, a.shape[0] + 1):
            cur[0] = i
            for j in range(1, n + 1):
                d = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
                if prev[j] + 1 < d:
                    d = prev[j] + 1
                if cur[j - 1] + 1 < d:
                    d = cur[j - 1] + 1
                cur[j] = d
            prev, cur = cur, prev
        return prev[n]


def _edit_distance_np(a: np.ndarray, b: np.ndarray) -> int:
    # Row-wise DP.  The in-row dependency cur[j] <= cur[j-1] + 1 is resolved
    # without a scalar loop: min over k<=j of cur[k] + (j-k) equals
    # minimum.accumulate(cur - j) + j.
    n = b.shape[0]
    steps = np.arange(n + 1, dtype=np.int64)
    prev = steps.copy()
    cur = np.empty(n + 1, dtype=np.int64)
    for i in range(1, a.shape[0] + 1):
        cost = (b != a[i - 1]).astype(np.int64)
        cur[0] = i
        cur[1:] = np.minimum(prev[1:] + 1, prev[:-1] + cost)
        np.minimum(cur, np.minimum.accumulate(cur - steps) + steps, out=cur)
        prev, cur = cur, prev
    return int(prev[n])


def edit_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Levenshtein distance between two uint32 codepoint arrays."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return a.shape[0] + b.shape[0]
    if USE_NUMBA:
        return int(_edit_distance_nb(a, b))
    return _edit_distance_np(a, b)


# ---------------------------------------------------------------------------
# Inverted-index score accumulation
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _accumulate_idf_nb(offsets: np.ndarray, postings: np.ndarray, idf: np.ndarray,
                           query_tokens: np.ndarray, out: np.ndarray) -> None:
        for k in range(query_tokens.shape[0]):
            t = query_tokens[k]
            w = idf[t]
            for j in range(offsets[t], offsets[t + 1]):
                out[postings[j]] += w


def _accumulate_idf_np(offsets: np.ndarray, postings: np.ndarray, idf: np.ndarray,
                       query_tokens: np.ndarray, out: np.ndarray) -> None:
    if query_tokens.shape[0] == 0:
        return
    lengths = offsets[query_tokens + 1] - offsets[query_tokens]
    hit = np.concatenate([postings[offsets[t]:offsets[t + 1]] for t in query_tokens])
    # np.add.at applies additions in index order, which matches the jitted
    # loop's token-major order because `hit` is concatenated per query token.
    np.add.at(out, hit, np.repeat(idf[query_tokens], lengths))


def accumulate_idf(offsets: np.ndarray, postings: np.ndarray, idf: np.ndarray,
                   query_tokens: np.ndarray, n_classes: int) -> np.ndarray:
    """Sum idf[t] into each class listed in postings[offsets[t]:offsets[t+1]].

    ``offsets``/``postings`` are a CSR layout of token -> class-id lists and
    ``query_tokens`` selects which token rows contribute.  Returns a float64
    score per class.
    """
    out = np.zeros(n_classes, dtype=np.float64)
    if USE_NUMBA:
        _accumulate_idf_nb(offsets, postings, idf, query_tokens, out)
    else:
        _accumulate_idf_np(offsets, postings, idf, query_tokens, out)
    return out


def warmup() -> None:
    """Trigger JIT compilation so first-use latency stays out of timed paths."""
    a = codepoints("ab")
    b = codepoints("ba")
    edit_distance(a, b)
    offsets = np.array([0, 1], dtype=np.int64)
    postings = np.array([0], dtype=np.int64)
    idf = np.array([1.0])
    accumulate_idf(offsets, postings, idf, np.array([0], dtype=np.int64), 1)
