import csv
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontomatch.errors import ConfigError, InsufficientDataError
from ontomatch.evaluate import (
    DEFAULT_LAMBDA_GRID,
    SEMI_SUPERVISED_FRACTIONS,
    UNSUPERVISED_FRACTIONS,
    SplitSpec,
    evaluate,
    split_references,
    union_ignore,
    validate_hyperparams,
    write_grid_csv,
)
from ontomatch.ontology import MappingSet, ScoredMapping


def ms(*pairs, scores=None):
    scores = scores or [1.0] * len(pairs)
    return MappingSet(entries=[ScoredMapping(a, b, s) for (a, b), s in zip(pairs, scores)])


class TestEvaluate:
    def test_half_right(self):
        report = evaluate(ms((0, 0), (1, 1)), ms((0, 0), (2, 2)))
        assert report.precision == 0.5
        assert report.recall == 0.5
        assert report.f1 == 0.5
        assert report.counts == {"hits": 1, "output_considered": 2,
                                 "references_considered": 2}

    def test_perfect(self):
        report = evaluate(ms((0, 0), (1, 1)), ms((1, 1), (0, 0)))
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_asymmetric(self):
        # 2 of 3 outputs correct; 2 of 4 references found
        report = evaluate(ms((0, 0), (1, 1), (9, 9)), ms((0, 0), (1, 1), (2, 2), (3, 3)))
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(0.5)
        assert report.f1 == pytest.approx(2 * (2 / 3) * 0.5 / (2 / 3 + 0.5))

    def test_ignored_false_positive_is_neutral(self):
        without = evaluate(ms((0, 0), (5, 5)), ms((0, 0)))
        assert without.precision == 0.5
        with_ignore = evaluate(ms((0, 0), (5, 5)), ms((0, 0)), ignored=ms((5, 5)))
        assert with_ignore.precision == 1.0
        assert with_ignore.ignored_size == 1

    def test_ignored_missed_reference_is_neutral(self):
        without = evaluate(ms((0, 0)), ms((0, 0), (7, 7)))
        assert without.recall == 0.5
        with_ignore = evaluate(ms((0, 0)), ms((0, 0), (7, 7)), ignored=ms((7, 7)))
        assert with_ignore.recall == 1.0

    def test_ignored_hit_counts_nowhere(self):
        report = evaluate(ms((0, 0), (1, 1)), ms((0, 0), (1, 1)), ignored=ms((1, 1)))
        assert report.counts == {"hits": 1, "output_considered": 1,
                                 "references_considered": 1}

    def test_empty_output_flags(self, caplog):
        report = evaluate(MappingSet(), ms((0, 0)))
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.f1 == 0.0
        assert report.empty_output and not report.empty_references
        assert "no output mappings" in caplog.text

    def test_empty_references_flags(self):
        report = evaluate(ms((0, 0)), MappingSet())
        assert report.empty_references and not report.empty_output
        assert report.f1 == 0.0

    def test_to_dict_optional_fields(self):
        report = evaluate(ms((0, 0)), ms((0, 0)))
        d = report.to_dict()
        assert "tau" not in d and "lambda" not in d
        assert "empty_output" not in d
        report.tau = "combined"
        report.lam = 0.95
        d = report.to_dict()
        assert d["tau"] == "combined"
        assert d["lambda"] == 0.95

    @settings(max_examples=100, deadline=None)
    @given(st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=25),
           st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=25),
           st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=10))
    def test_against_naive_counting(self, out_pairs, ref_pairs, ignore_pairs):
        report = evaluate(ms(*out_pairs), ms(*ref_pairs), ignored=ms(*ignore_pairs))
        o = out_pairs - ignore_pairs
        r = ref_pairs - ignore_pairs
        tp = len(o & r)
        p = tp / len(o) if o else 0.0
        rec = tp / len(r) if r else 0.0
        assert report.precision == p
        assert report.recall == rec
        if p + rec:
            assert report.f1 == pytest.approx(2 * p * rec / (p + rec))
        else:
            assert report.f1 == 0.0


class TestSplitReferences:
    def _refs(self, n):
        return ms(*[(i, i) for i in range(n)])

    def test_unsupervised_ten(self):
        train, val, test = split_references(self._refs(10), SplitSpec(seed=1))
        assert (len(train), len(val), len(test)) == (0, 1, 9)

    def test_semi_supervised_ten(self):
        spec = SplitSpec(mode="semi-supervised", fractions=SEMI_SUPERVISED_FRACTIONS, seed=1)
        train, val, test = split_references(self._refs(10), spec)
        assert (len(train), len(val), len(test)) == (2, 1, 7)

    def test_partition(self):
        refs = self._refs(23)
        spec = SplitSpec(mode="semi-supervised", fractions=SEMI_SUPERVISED_FRACTIONS, seed=5)
        train, val, test = split_references(refs, spec)
        parts = train.pairs() | val.pairs() | test.pairs()
        assert parts == refs.pairs()
        assert len(train) + len(val) + len(test) == 23
        assert not (train.pairs() & val.pairs())
        assert not (train.pairs() & test.pairs())
        assert not (val.pairs() & test.pairs())

    def test_same_seed_same_split(self):
        a = split_references(self._refs(30), SplitSpec(seed=9))
        b = split_references(self._refs(30), SplitSpec(seed=9))
        for x, y in zip(a, b):
            assert [m.pair() for m in x] == [m.pair() for m in y]

    def test_seed_changes_assignment(self):
        a = split_references(self._refs(30), SplitSpec(seed=9))
        b = split_references(self._refs(30), SplitSpec(seed=10))
        assert [m.pair() for m in a[2]] != [m.pair() for m in b[2]]

    def test_spec_validation(self):
        with pytest.raises(ConfigError, match="mode"):
            SplitSpec(mode="zen").validate()
        with pytest.raises(ConfigError, match="sum to 1"):
            SplitSpec(fractions=(0.0, 0.5, 0.6)).validate()
        with pytest.raises(ConfigError, match="zero train"):
            SplitSpec(mode="unsupervised", fractions=(0.2, 0.1, 0.7)).validate()
        SplitSpec(mode="semi-supervised", fractions=SEMI_SUPERVISED_FRACTIONS).validate()
        SplitSpec(fractions=UNSUPERVISED_FRACTIONS).validate()


class TestValidateHyperparams:
    def test_tie_prefers_larger_threshold(self):
        # all scores 1.0: every threshold yields the same set and the same F1
        scored = {"src2tgt": ms((0, 0), (1, 1))}
        tau, lam, rows = validate_hyperparams(scored, ms((0, 0)), None,
                                              lambda_grid=(0.99, 0.999))
        assert tau == "src2tgt"
        assert lam == 0.999
        assert len(rows) == 2

    def test_tie_prefers_earlier_direction(self):
        scored = {"src2tgt": ms((0, 0)), "tgt2src": ms((0, 0)), "combined": ms((0, 0))}
        tau, lam, _ = validate_hyperparams(scored, ms((0, 0)), None)
        assert tau == "src2tgt"
        assert lam == DEFAULT_LAMBDA_GRID[-1]

    def test_best_cell_wins(self):
        # tgt2src holds the only correct pair above 0.97
        scored = {
            "src2tgt": ms((5, 5), scores=[1.0]),
            "tgt2src": ms((0, 0), (6, 6), scores=[0.98, 0.95]),
        }
        val = ms((0, 0))
        tau, lam, _ = validate_hyperparams(scored, val, None, lambda_grid=(0.95, 0.97))
        assert tau == "tgt2src"
        assert lam == 0.97  # 0.97 drops (6, 6): precision 1.0 beats 0.5

    def test_rows_cover_the_whole_grid(self):
        scored = {"src2tgt": ms((0, 0)), "tgt2src": ms((1, 1)), "combined": ms((2, 2))}
        _, _, rows = validate_hyperparams(scored, ms((0, 0)), None)
        assert len(rows) == 3 * len(DEFAULT_LAMBDA_GRID)
        assert [r["direction"] for r in rows[:len(DEFAULT_LAMBDA_GRID)]] \
            == ["src2tgt"] * len(DEFAULT_LAMBDA_GRID)

    def test_empty_validation_set_rejected(self):
        with pytest.raises(InsufficientDataError):
            validate_hyperparams({"src2tgt": ms((0, 0))}, MappingSet(), None)

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_against_naive_scan(self, data):
        pair = st.tuples(st.integers(0, 8), st.integers(0, 8))
        grid = (0.5, 0.7, 0.9)
        scored = {}
        for name in ("src2tgt", "tgt2src", "combined"):
            pairs = data.draw(st.lists(pair, max_size=8, unique=True))
            scores = [data.draw(st.sampled_from((0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)))
                      for _ in pairs]
            scored[name] = ms(*pairs, scores=scores)
        val = ms(*data.draw(st.sets(pair, min_size=1, max_size=8)))

        tau, lam, rows = validate_hyperparams(scored, val, None, lambda_grid=grid)
        # naive scan: max by (f1, lambda), earliest direction on full ties
        dir_index = {"src2tgt": 0, "tgt2src": 1, "combined": 2}
        best = max(rows, key=lambda r: (r["f1"], r["lambda"], -dir_index[r["direction"]]))
        assert (tau, lam) == (best["direction"], best["lambda"])

    def test_grid_csv_round_trip(self, tmp_path):
        scored = {"src2tgt": ms((0, 0), scores=[0.96])}
        _, _, rows = validate_hyperparams(scored, ms((0, 0)), None,
                                          lambda_grid=(0.95, 0.97))
        path = tmp_path / "grid.csv"
        write_grid_csv(rows, str(path))
        with open(path, newline="") as f:
            back = list(csv.DictReader(f))
        assert [r["direction"] for r in back] == ["src2tgt", "src2tgt"]
        assert [r["lambda"] for r in back] == ["0.95", "0.97"]
        assert float(back[0]["f1"]) == 1.0
        assert float(back[1]["f1"]) == 0.0


class TestUnionIgnore:
    def test_union_dedup_and_none(self):
        a = ms((0, 0), (1, 1))
        b = ms((1, 1), (2, 2))
        u = union_ignore(a, None, b)
        assert [m.pair() for m in u] == [(0, 0), (1, 1), (2, 2)]

    def test_empty(self):
        assert len(union_ignore(None, None)) == 0
