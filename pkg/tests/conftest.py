"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import json
import random

import pytest

from ontomatch.ontology import Ontology, preprocess_label

WORD_POOL = [
    "heart", "cor", "liver", "hepar", "lung", "pulmo", "kidney", "ren",
    "brain", "stem", "cortex", "ventricle", "atrium", "lobe", "layer",
    "muscle", "nerve", "artery", "vein", "bone", "left", "right", "upper",
    "lower", "anterior", "posterior", "medial", "lateral", "cervical",
    "thoracic",
]


def build_ontology(name: str, rows: list[tuple[str, list[str], list[str]]]) -> Ontology:
    """Rows of (iri, raw labels, parent iris) -> finalized Ontology."""
    onto = Ontology(name)
    for iri, labels, _parents in rows:
        cls = onto.add_class(iri)
        for lab in labels:
            norm = preprocess_label(lab)
            if norm and norm not in cls.labels:
                cls.labels.append(norm)
    for iri, _labels, parents in rows:
        cls = onto.by_iri(iri)
        for piri in parents:
            cls.parents.add(onto.add_class(piri, declared=False).id)
    onto._finalize()
    return onto


def random_ontology(rng: random.Random, name: str, n_classes: int,
                    word_pool: list[str] | None = None, max_labels: int = 3,
                    label_words: int = 2, parent_prob: float = 0.7) -> Ontology:
    """Random tree-shaped ontology with multi-word labels from a fixed pool."""
    pool = word_pool or WORD_POOL
    rows = []
    for i in range(n_classes):
        n_labels = rng.randint(1, max_labels)
        labels = []
        for _ in range(n_labels):
            labels.append(" ".join(rng.choice(pool) for _ in range(label_words)))
        parents = []
        if i > 0 and rng.random() < parent_prob:
            parents.append(f"http://test.org/{name}#C{rng.randrange(i)}")
        rows.append((f"http://test.org/{name}#C{i}", labels, parents))
    return build_ontology(name, rows)


def vocab_for(*ontologies: Ontology) -> list[str]:
    """Word-level vocabulary covering every label word, plus [UNK]."""
    words: set[str] = set()
    for onto in ontologies:
        for cls in onto.classes:
            for lab in cls.labels:
                words.update(lab.split())
    return ["[UNK]"] + sorted(words)


def write_vocab(path, vocab: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(vocab) + "\n")


def ontology_to_json(onto: Ontology) -> dict:
    classes = []
    for c in onto.classes:
        classes.append({
            "iri": c.iri,
            "labels": list(c.labels),
            "parents": sorted(onto.iri_of(p) for p in c.parents),
        })
    return {"name": onto.name, "classes": classes}


def write_ontology_json(path, onto: Ontology) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ontology_to_json(onto), f, indent=1)


@pytest.fixture
def tiny_pair() -> tuple[Ontology, Ontology]:
    """Two 4-class ontologies with one exact shared label per true match."""
    src = build_ontology("tiny-src", [
        ("http://a#heart", ["Heart", "cor"], []),
        ("http://a#lv", ["left ventricle"], ["http://a#heart"]),
        ("http://a#liver", ["Liver"], []),
        ("http://a#lobe", ["liver lobe"], ["http://a#liver"]),
    ])
    tgt = build_ontology("tiny-tgt", [
        ("http://b#heart", ["heart"], []),
        ("http://b#lv", ["Left_Ventricle"], ["http://b#heart"]),
        ("http://b#liver", ["liver", "hepar"], []),
        ("http://b#lobe", ["lobe of liver", "liver lobe"], ["http://b#liver"]),
    ])
    return src, tgt
