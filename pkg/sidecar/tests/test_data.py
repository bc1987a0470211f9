"""Corpus loading: accepted shapes and rejected shapes, with located errors."""

import pytest

from synscorer.data import Sample, load_corpus
from synscorer.errors import CorpusFormatError


def write(tmp_path, text):
    path = tmp_path / "corpus.jsonl"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_loads_minimal_and_full_rows(tmp_path):
    path = write(tmp_path, '{"l": "a", "r": "b", "y": 1}\n'
                           '{"l": "c", "r": "d", "y": 0, "origin": "ids"}\n')
    samples = load_corpus(path)
    assert samples == [Sample("a", "b", 1, ""), Sample("c", "d", 0, "ids")]


def test_skips_blank_lines(tmp_path):
    path = write(tmp_path, '\n{"l": "a", "r": "b", "y": 1}\n\n\n')
    assert len(load_corpus(path)) == 1


def test_empty_file_rejected(tmp_path):
    path = write(tmp_path, "\n\n")
    with pytest.raises(CorpusFormatError, match="no samples"):
        load_corpus(path)


def test_invalid_json_points_at_line(tmp_path):
    path = write(tmp_path, '{"l": "a", "r": "b", "y": 1}\n{oops\n')
    with pytest.raises(CorpusFormatError, match=r"corpus\.jsonl:2: invalid JSON"):
        load_corpus(path)


def test_missing_key_rejected(tmp_path):
    path = write(tmp_path, '{"l": "a", "y": 1}\n')
    with pytest.raises(CorpusFormatError, match=":1:"):
        load_corpus(path)


def test_unknown_key_rejected(tmp_path):
    path = write(tmp_path, '{"l": "a", "r": "b", "y": 1, "extra": 2}\n')
    with pytest.raises(CorpusFormatError, match="extra"):
        load_corpus(path)


def test_non_object_line_rejected(tmp_path):
    path = write(tmp_path, '["a", "b", 1]\n')
    with pytest.raises(CorpusFormatError):
        load_corpus(path)


@pytest.mark.parametrize("y", ["1", 2, -1, 0.5, True, False, None])
def test_bad_label_values_rejected(tmp_path, y):
    import json
    path = write(tmp_path, json.dumps({"l": "a", "r": "b", "y": y}) + "\n")
    with pytest.raises(CorpusFormatError):
        load_corpus(path)


def test_empty_left_label_rejected(tmp_path):
    path = write(tmp_path, '{"l": "", "r": "b", "y": 1}\n')
    with pytest.raises(CorpusFormatError):
        load_corpus(path)


def test_non_string_sides_rejected(tmp_path):
    path = write(tmp_path, '{"l": 3, "r": "b", "y": 1}\n')
    with pytest.raises(CorpusFormatError):
        load_corpus(path)
