"""Sub-word tokenization and inverted-index candidate selection.

A greedy longest-match-first tokenizer (vocabulary file, one token per line,
``##`` marking word-internal continuations) feeds an inverted index over the
target ontology's labels.  Candidate targets for a source class are ranked by
summed inverse-document-frequency of shared tokens, so rare shared sub-words
count for more than ubiquitous ones.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ontomatch import _kernels
from ontomatch.errors import ParseError
from ontomatch.ontology import Ontology

log = logging.getLogger(__name__)

UNK = "[UNK]"
MAX_WORD_CHARS = 100

DEFAULT_TOP_K = 200


class WordPieceTokenizer:
    """Greedy longest-match sub-word tokenizer over a fixed vocabulary."""

    def __init__(self, vocab: list[str]):
        self.vocab = vocab
        self.token_ids = {tok: i for i, tok in enumerate(vocab)}
        if UNK not in self.token_ids:
            raise ParseError(f"vocabulary lacks the required {UNK} token")
        self.unk_id = self.token_ids[UNK]

    @classmethod
    def from_file(cls, path: str) -> "WordPieceTokenizer":
        vocab: list[str] = []
        seen: set[str] = set()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                tok = line.rstrip("\n")
                if not tok:
                    continue
                if tok in seen:
                    raise ParseError(f"duplicate vocabulary token {tok!r}",
                                     path=path, line=lineno)
                seen.add(tok)
                vocab.append(tok)
        try:
            return cls(vocab)
        except ParseError as e:
            raise ParseError(str(e), path=path) from None

    def tokenize_word(self, word: str) -> list[str]:
        """Split one word into sub-word pieces; an unsplittable word becomes [UNK]."""
        if not word:
            return []
        if len(word) > MAX_WORD_CHARS:
            return [UNK]
        pieces: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                sub = word[start:end]
                if start > 0:
                    sub = "##" + sub
                if sub in self.token_ids:
                    match = sub
                    break
                end -= 1
            if match is None:
                return [UNK]
            pieces.append(match)
            start = end
        return pieces

    def tokenize(self, text: str) -> list[str]:
        out: list[str] = []
        for word in text.split(" "):
            out.extend(self.tokenize_word(word))
        return out

    def encode(self, text: str) -> list[int]:
        return [self.token_ids[tok] for tok in self.tokenize(text)]


class SubwordIndex:
    """Inverted index from sub-word token to target-class ids, with idf scoring.

    Scores are accumulated in ascending-token-id order (queries are sorted
    before hitting the kernel), which pins down the floating-point summation
    order and keeps results identical across kernel implementations.
    """

    def __init__(self, onto: Ontology, tokenizer: WordPieceTokenizer):
        self.onto = onto
        self.tokenizer = tokenizer
        n_vocab = len(tokenizer.vocab)
        n_classes = len(onto.classes)

        postings_sets: dict[int, list[int]] = {}
        self._class_tokens: list[np.ndarray] = []
        for cls in onto.classes:
            toks = self.label_tokens(cls.labels)
            self._class_tokens.append(toks)
            for t in toks.tolist():
                lst = postings_sets.setdefault(t, [])
                if not lst or lst[-1] != cls.id:
                    lst.append(cls.id)  # class ids arrive ascending

        offsets = np.zeros(n_vocab + 1, dtype=np.int64)
        chunks: list[list[int]] = []
        total = 0
        for t in range(n_vocab):
            lst = postings_sets.get(t, [])
            total += len(lst)
            offsets[t + 1] = total
            if lst:
                chunks.append(lst)
        self.offsets = offsets
        self.postings = (np.concatenate([np.asarray(c, dtype=np.int64) for c in chunks])
                         if chunks else np.zeros(0, dtype=np.int64))

        # math.log10 rather than np.log10: scalar libm rounding is what the
        # documented formula (and any independent reimplementation) produces,
        # and idf is computed once per build so vectorization buys nothing.
        df = offsets[1:] - offsets[:-1]
        self.idf = np.zeros(n_vocab, dtype=np.float64)
        for t in range(n_vocab):
            if df[t] > 0:
                self.idf[t] = math.log10(n_classes / int(df[t]))
        self.n_classes = n_classes

    def label_tokens(self, labels: list[str]) -> np.ndarray:
        """Sorted unique token ids over a label set, [UNK] excluded."""
        seen: set[int] = set()
        for lab in labels:
            seen.update(self.tokenizer.encode(lab))
        seen.discard(self.tokenizer.unk_id)
        return np.asarray(sorted(seen), dtype=np.int64)

    def class_tokens(self, cid: int) -> np.ndarray:
        return self._class_tokens[cid]

    def overlap_score(self, query_tokens: np.ndarray, cid: int) -> float:
        """Summed idf over tokens shared with one class (ascending token order)."""
        common = np.intersect1d(query_tokens, self._class_tokens[cid], assume_unique=True)
        total = 0.0
        for t in common.tolist():
            total += float(self.idf[t])
        return total

    def candidates(self, labels: list[str], k: int = DEFAULT_TOP_K) -> list[tuple[int, float]]:
        """Top-k target classes sharing tokens with ``labels``, best first.

        Orders by descending score, then ascending target IRI; classes with no
        token overlap never appear.
        """
        q = self.label_tokens(labels)
        scores = _kernels.accumulate_idf(self.offsets, self.postings, self.idf,
                                         q, self.n_classes)
        nz = np.nonzero(scores > 0.0)[0]
        if nz.size == 0:
            return []
        order = np.lexsort((self._iri_ranks()[nz], -scores[nz]))
        take = nz[order[: max(k, 0)]]
        return [(int(cid), float(scores[cid])) for cid in take]

    def to_json_dict(self) -> dict:
        """Inspection dump: {"class_count": n, "postings": {token: [iri, ...]}}."""
        postings: dict[str, list[str]] = {}
        for t in range(len(self.tokenizer.vocab)):
            lo, hi = int(self.offsets[t]), int(self.offsets[t + 1])
            if hi > lo:
                postings[self.tokenizer.vocab[t]] = [
                    self.onto.iri_of(int(cid)) for cid in self.postings[lo:hi]
                ]
        return {"class_count": self.n_classes, "postings": postings}

    def _iri_ranks(self) -> np.ndarray:
        ranks = getattr(self, "_iri_rank_cache", None)
        if ranks is None:
            order = sorted(range(self.n_classes), key=lambda i: self.onto.classes[i].iri)
            ranks = np.empty(self.n_classes, dtype=np.int64)
            for rank, cid in enumerate(order):
                ranks[cid] = rank
            self._iri_rank_cache = ranks
        return ranks
