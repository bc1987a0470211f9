import json
import logging
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import WORD_POOL, build_ontology, random_ontology
from ontomatch.corpus import (
    ORIGINS,
    Corpus,
    CorpusConfig,
    CorpusSample,
    build_comp_corpus,
    build_cross_corpus,
    build_intra_corpus,
    corpus_manifest,
    load_corpus,
    merge_and_split,
    save_corpus,
)
from ontomatch.errors import ConfigError, InsufficientDataError
from ontomatch.ontology import MappingSet, ScoredMapping


def _onto_strategy(min_classes=3, max_classes=15):
    return st.builds(
        lambda seed, n: random_ontology(random.Random(seed), "rand", n, WORD_POOL),
        st.integers(0, 10_000), st.integers(min_classes, max_classes))


class TestIntraCorpus:
    @settings(max_examples=30, deadline=None)
    @given(_onto_strategy(), st.integers(0, 99))
    def test_invariants(self, onto, seed):
        corpus = build_intra_corpus(onto, CorpusConfig(seed=seed))
        syn = [s for s in corpus.samples if s.is_synonym]
        non = [s for s in corpus.samples if not s.is_synonym]
        # quota: at most 4 negatives enter per synonym, never more
        assert len(non) <= 4 * len(syn)
        # no negative may collide with a known synonym pair
        syn_pairs = {(s.left, s.right) for s in syn}
        assert all((s.left, s.right) not in syn_pairs for s in non)
        assert all(s.origin in ORIGINS for s in corpus.samples)
        # no exact duplicates survive
        keys = [s.key() for s in corpus.samples]
        assert len(keys) == len(set(keys))

    @settings(max_examples=30, deadline=None)
    @given(_onto_strategy(), st.integers(0, 99))
    def test_synonyms_appear_in_both_orders(self, onto, seed):
        corpus = build_intra_corpus(onto, CorpusConfig(seed=seed))
        syn_pairs = corpus.synonym_pairs()
        assert all((r, l) in syn_pairs for l, r in syn_pairs)

    def test_both_orders_and_identity(self):
        onto = build_ontology("o", [
            ("http://o#a", ["heart", "cor"], []),
            ("http://o#b", ["liver"], []),
            ("http://o#c", ["lung"], []),
        ])
        corpus = build_intra_corpus(onto, CorpusConfig(seed=3))
        syn = {(s.left, s.right) for s in corpus.samples if s.origin == "intra-syn"}
        assert syn == {("heart", "cor"), ("cor", "heart")}
        ids = {(s.left, s.right) for s in corpus.samples if s.origin == "identity-syn"}
        assert ids == {("heart", "heart"), ("cor", "cor"), ("liver", "liver"), ("lung", "lung")}

    def test_identity_samples_can_be_disabled(self):
        onto = build_ontology("o", [
            ("http://o#a", ["heart", "cor"], []),
            ("http://o#b", ["liver"], []),
        ])
        corpus = build_intra_corpus(onto, CorpusConfig(use_ids=False, seed=3))
        assert not any(s.origin == "identity-syn" for s in corpus.samples)
        assert not any(s.left == s.right for s in corpus.samples if s.is_synonym)

    def test_hard_negatives_pair_siblings(self):
        # one label per class, unique, so each sample identifies its classes
        onto = build_ontology("o", [
            ("http://o#root", ["body"], []),
            ("http://o#a", ["heart", "cor"], ["http://o#root"]),
            ("http://o#b", ["liver"], ["http://o#root"]),
            ("http://o#c", ["lung"], ["http://o#root"]),
            ("http://o#d", ["nerve"], ["http://o#a"]),  # not a sibling of a/b/c
        ])
        owner = {lab: cid for cid in range(len(onto.classes))
                 for lab in onto.classes[cid].labels}
        corpus = build_intra_corpus(onto, CorpusConfig(seed=7))
        hard = [s for s in corpus.samples if s.origin == "hard-nonsyn"]
        assert hard, "fixture should produce at least one sibling-based negative"
        for s in hard:
            left_cid, right_cid = owner[s.left], owner[s.right]
            assert right_cid in onto.siblings(left_cid)

    def test_classes_without_siblings_fall_back_to_soft(self):
        onto = build_ontology("o", [
            ("http://o#a", ["heart", "cor"], []),
            ("http://o#b", ["liver"], []),
        ])
        corpus = build_intra_corpus(onto, CorpusConfig(seed=1))
        assert not any(s.origin == "hard-nonsyn" for s in corpus.samples)
        assert any(s.origin == "soft-nonsyn" for s in corpus.samples)

    def test_deterministic_across_runs(self):
        onto = random_ontology(random.Random(5), "det", 12, WORD_POOL)
        a = build_intra_corpus(onto, CorpusConfig(seed=42))
        b = build_intra_corpus(onto, CorpusConfig(seed=42))
        assert a.samples == b.samples

    def test_seed_changes_draws(self):
        onto = random_ontology(random.Random(5), "det", 12, WORD_POOL)
        a = build_intra_corpus(onto, CorpusConfig(seed=42))
        b = build_intra_corpus(onto, CorpusConfig(seed=43))
        non_a = [s for s in a.samples if not s.is_synonym]
        non_b = [s for s in b.samples if not s.is_synonym]
        assert non_a != non_b

    def test_too_few_labeled_classes(self):
        onto = build_ontology("o", [("http://o#a", ["heart", "cor"], [])])
        with pytest.raises(InsufficientDataError, match="2 labeled classes"):
            build_intra_corpus(onto, CorpusConfig(seed=0))

    def test_no_synonyms_no_error(self):
        onto = build_ontology("o", [("http://o#a", [], [])])
        assert build_intra_corpus(onto, CorpusConfig(use_ids=False, seed=0)).samples == []


class TestCrossCorpus:
    def fixture(self):
        src = build_ontology("s", [
            ("http://s#a", ["heart", "cor"], []),
            ("http://s#b", ["liver"], []),
            ("http://s#c", ["lung"], []),
        ])
        tgt = build_ontology("t", [
            ("http://t#a", ["myocardium"], []),
            ("http://t#b", ["hepar"], []),
            ("http://t#c", ["pulmo"], []),
        ])
        return src, tgt

    def test_synonym_block_counts(self):
        src, tgt = self.fixture()
        train = MappingSet(entries=[ScoredMapping(0, 0, 1.0)])
        corpus = build_cross_corpus(src, tgt, train, CorpusConfig(seed=0))
        syn = [(s.left, s.right) for s in corpus.samples if s.is_synonym]
        # 2 source labels x 1 target label, each in both orders
        assert sorted(syn) == [("cor", "myocardium"), ("heart", "myocardium"),
                               ("myocardium", "cor"), ("myocardium", "heart")]
        non = [s for s in corpus.samples if not s.is_synonym]
        assert 0 < len(non) <= 4 * len(syn)
        assert all(s.origin == "cross-nonsyn" for s in non)

    def test_shared_label_not_duplicated(self):
        src = build_ontology("s", [("http://s#a", ["heart"], []), ("http://s#b", ["liver"], [])])
        tgt = build_ontology("t", [("http://t#a", ["heart"], []), ("http://t#b", ["hepar"], [])])
        train = MappingSet(entries=[ScoredMapping(0, 0, 1.0)])
        corpus = build_cross_corpus(src, tgt, train, CorpusConfig(seed=0))
        syn = [s for s in corpus.samples if s.is_synonym]
        assert [(s.left, s.right) for s in syn] == [("heart", "heart")]

    def test_negatives_avoid_matched_pairs(self):
        src, tgt = self.fixture()
        train = MappingSet(entries=[ScoredMapping(0, 0, 1.0), ScoredMapping(1, 1, 1.0)])
        corpus = build_cross_corpus(src, tgt, train, CorpusConfig(seed=0))
        syn_pairs = corpus.synonym_pairs()
        for s in corpus.samples:
            if not s.is_synonym:
                assert (s.left, s.right) not in syn_pairs

    def test_empty_train_warns(self, caplog):
        src, tgt = self.fixture()
        with caplog.at_level(logging.WARNING):
            corpus = build_cross_corpus(src, tgt, MappingSet(), CorpusConfig(seed=0))
        assert corpus.samples == []
        assert "no training mappings" in caplog.text

    def test_deterministic(self):
        src, tgt = self.fixture()
        train = MappingSet(entries=[ScoredMapping(0, 0, 1.0), ScoredMapping(2, 2, 1.0)])
        a = build_cross_corpus(src, tgt, train, CorpusConfig(seed=9))
        b = build_cross_corpus(src, tgt, train, CorpusConfig(seed=9))
        assert a.samples == b.samples


class TestCompCorpus:
    def fixture(self):
        o = build_ontology("s", [("http://s#a", ["heart"], [])])
        o2 = build_ontology("t", [("http://t#a", ["liver"], [])])
        aux = build_ontology("aux", [
            ("http://x#root", ["organ"], []),
            ("http://x#h", ["heart", "cor"], ["http://x#root"]),
            ("http://x#l", ["liver", "hepar"], ["http://x#root"]),
            ("http://x#z", ["flipper"], ["http://x#root"]),  # shares nothing
        ])
        return o, o2, aux

    def test_restricts_to_label_overlap(self):
        o, o2, aux = self.fixture()
        corpus = build_comp_corpus(o, o2, aux, CorpusConfig(seed=4))
        words = {s.left for s in corpus.samples} | {s.right for s in corpus.samples}
        assert "flipper" not in words
        assert "organ" not in words  # dropped: no label overlap with the inputs
        syn = {(s.left, s.right) for s in corpus.samples if s.origin == "comp-syn"}
        assert syn == {("heart", "cor"), ("cor", "heart"), ("liver", "hepar"), ("hepar", "liver")}

    def test_hierarchy_carries_over(self):
        # keep the shared parent so the two kept classes stay siblings
        o = build_ontology("s", [("http://s#a", ["heart"], []), ("http://s#o", ["organ"], [])])
        o2 = build_ontology("t", [("http://t#a", ["liver"], [])])
        _, _, aux = self.fixture()
        corpus = build_comp_corpus(o, o2, aux, CorpusConfig(seed=4))
        assert any(s.origin == "comp-hard-nonsyn" for s in corpus.samples)

    def test_no_overlap_warns(self, caplog):
        o = build_ontology("s", [("http://s#a", ["spleen"], [])])
        o2 = build_ontology("t", [("http://t#a", ["thymus"], [])])
        _, _, aux = self.fixture()
        with caplog.at_level(logging.WARNING):
            corpus = build_comp_corpus(o, o2, aux, CorpusConfig(seed=4))
        assert corpus.samples == []
        assert "no auxiliary class" in caplog.text


class TestMergeAndSplit:
    def _corpus(self, n_pairs, seed=0):
        samples = []
        for i in range(n_pairs):
            samples.append(CorpusSample(f"w{i}", f"v{i}", True, "intra-syn"))
            samples.append(CorpusSample(f"v{i}", f"w{i}", True, "intra-syn"))
        return Corpus(samples, CorpusConfig(seed=seed), seed)

    def test_split_sizes_on_pairs(self):
        train, val = merge_and_split([self._corpus(10)], val_fraction=0.2)
        train_groups = {s.unordered() for s in train.samples}
        val_groups = {s.unordered() for s in val.samples}
        assert len(val_groups) == 2
        assert len(train_groups) == 8
        assert not train_groups & val_groups

    def test_reverse_lands_with_its_pair(self):
        train, val = merge_and_split([self._corpus(10)], val_fraction=0.3)
        for part in (train, val):
            present = {(s.left, s.right) for s in part.samples}
            assert all((r, l) in present for l, r in present)

    def test_same_seed_same_split(self):
        a = merge_and_split([self._corpus(10, seed=5)], val_fraction=0.2)
        b = merge_and_split([self._corpus(10, seed=5)], val_fraction=0.2)
        assert a[0].samples == b[0].samples
        assert a[1].samples == b[1].samples

    def test_merge_applies_collision_rule_globally(self):
        syn = Corpus([CorpusSample("a", "b", True, "cross-syn")], CorpusConfig(seed=0), 0)
        non = Corpus([CorpusSample("a", "b", False, "soft-nonsyn"),
                      CorpusSample("a", "c", False, "soft-nonsyn")], CorpusConfig(seed=0), 0)
        train, val = merge_and_split([syn, non], val_fraction=0.5)
        merged = train.samples + val.samples
        assert CorpusSample("a", "b", False, "soft-nonsyn") not in merged
        assert CorpusSample("a", "c", False, "soft-nonsyn") in merged

    def test_bad_fraction(self):
        with pytest.raises(ConfigError):
            merge_and_split([self._corpus(4)], val_fraction=1.0)

    def test_no_corpora(self):
        with pytest.raises(InsufficientDataError):
            merge_and_split([], val_fraction=0.2)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        onto = random_ontology(random.Random(2), "ser", 10, WORD_POOL)
        corpus = build_intra_corpus(onto, CorpusConfig(seed=8))
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, str(path))
        loaded = load_corpus(str(path), CorpusConfig(seed=8))
        assert loaded.samples == corpus.samples

    def test_line_format(self, tmp_path):
        corpus = Corpus([CorpusSample("a b", "c", False, "soft-nonsyn")], CorpusConfig(), 0)
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, str(path))
        line = path.read_text(encoding="utf-8").strip()
        assert line == '{"l": "a b", "r": "c", "y": 0, "origin": "soft-nonsyn"}'
        assert json.loads(line)["y"] == 0

    def test_manifest_counts(self):
        onto = build_ontology("o", [
            ("http://o#a", ["heart", "cor"], []),
            ("http://o#b", ["liver"], []),
        ])
        corpus = build_intra_corpus(onto, CorpusConfig(seed=1))
        train, val = merge_and_split([corpus], val_fraction=0.4)
        manifest = corpus_manifest({"intra-src": corpus}, train, val, 0.4)
        assert manifest["sources"]["intra-src"]["samples"] == len(corpus)
        assert manifest["train_samples"] == len(train)
        assert manifest["val_samples"] == len(val)
        assert manifest["config"]["negatives_per_synonym"] == 4
        assert manifest["config"]["soft_hard_split"] == [2, 2]


class TestCorpusConfig:
    def test_split_must_sum(self):
        with pytest.raises(ConfigError, match="sum"):
            CorpusConfig(negatives_per_synonym=4, soft_hard_split=(3, 2)).validate()

    def test_split_non_negative(self):
        with pytest.raises(ConfigError):
            CorpusConfig(negatives_per_synonym=0, soft_hard_split=(-1, 1)).validate()

    def test_default_is_valid(self):
        CorpusConfig().validate()
