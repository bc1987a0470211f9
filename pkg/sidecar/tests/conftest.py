import json
import random

import pytest
import transformers

from synscorer.tiny import CONTENT_WORDS, make_tiny_checkpoint

transformers.utils.logging.set_verbosity_error()
transformers.utils.logging.disable_progress_bar()

# Label templates for the synthetic ontology pair used across the suite.
SRC_TEMPLATES = ["{w} structure", "{w} region part", "main {w} area", "the {w} zone"]
TGT_TEMPLATES = ["structure of {w}", "{w} segment", "{w} body portion", "whole {w} unit"]


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory):
    """A locally pretrained base checkpoint, built once per session."""
    out = tmp_path_factory.mktemp("base") / "tiny-base"
    make_tiny_checkpoint(str(out))
    return str(out)


def synonym_corpus(n_words: int = 25, negatives_per: int = 4, seed: int = 13,
                   val_fraction: float = 0.2):
    """Positive pairs from shared-word templates, negatives from mismatched words.

    Returns (train_samples, val_samples) as lists of dicts in corpus JSONL shape.
    """
    rng = random.Random(seed)
    words = CONTENT_WORDS[:n_words]
    positives = []
    for w in words:
        for src_t in SRC_TEMPLATES:
            for tgt_t in TGT_TEMPLATES:
                positives.append((src_t.format(w=w), tgt_t.format(w=w)))
    rng.shuffle(positives)
    samples = [{"l": l, "r": r, "y": 1} for l, r in positives]
    for l, r in positives:
        for _ in range(negatives_per):
            other = rng.choice([w for w in words if w not in l])
            samples.append({"l": l, "r": rng.choice(TGT_TEMPLATES).format(w=other),
                            "y": 0})
    rng.shuffle(samples)
    n_val = int(len(samples) * val_fraction)
    return samples[n_val:], samples[:n_val]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return str(path)
