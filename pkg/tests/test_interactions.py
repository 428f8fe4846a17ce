import numpy as np
import pytest

from milk.datamodel.interactions import InteractionSet, load_interactions, write_interactions
from milk.errors import DimensionError, EmptyDatasetError, ParseError


def write(tmp_path, text, name="inter.tsv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_merges_duplicates(tmp_path):
    interactions = load_interactions(write(tmp_path, "0\t1\n0\t1\n1\t2\n"))
    assert len(interactions) == 2
    assert interactions.n_users == 2
    assert interactions.n_items == 3
    assert interactions.raw_item_ids is None


def test_malformed_line_reports_line_number(tmp_path):
    with pytest.raises(ParseError) as info:
        load_interactions(write(tmp_path, "0\t1\n0 1\n"))
    assert info.value.line_no == 2


def test_non_integer_id_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_interactions(write(tmp_path, "0\tabc\n"))


def test_empty_file(tmp_path):
    with pytest.raises(EmptyDatasetError):
        load_interactions(write(tmp_path, "\n\n"))


def test_sparse_ids_are_reindexed(tmp_path):
    interactions = load_interactions(write(tmp_path, "0\t1000\n0\t5\n1\t5\n"))
    assert interactions.n_items == 2
    assert interactions.raw_item_ids.tolist() == [5, 1000]
    assert interactions.positives(0).tolist() == [0, 1]


def test_positives_sorted_and_users():
    interactions = InteractionSet(3, 5, np.array([[2, 4], [0, 3], [0, 1], [2, 0]]))
    assert interactions.users.tolist() == [0, 2]
    assert interactions.positives(0).tolist() == [1, 3]
    assert interactions.positives(1).tolist() == []


def test_out_of_range_ids():
    with pytest.raises(DimensionError):
        InteractionSet(2, 2, np.array([[0, 2]]))


def test_restrict_and_with_n_items():
    interactions = InteractionSet(2, 3, np.array([[0, 0], [0, 2], [1, 1]]))
    kept = interactions.restrict(interactions.pairs[:, 1] != 2)
    assert len(kept) == 2
    assert kept.with_n_items(5).n_items == 5
    with pytest.raises(DimensionError):
        interactions.with_n_items(2)


def test_write_then_load(tmp_path):
    interactions = InteractionSet(3, 4, np.array([[0, 1], [1, 3], [2, 0], [2, 2]]))
    path = tmp_path / "out" / "inter.tsv"
    write_interactions(interactions, path)
    loaded = load_interactions(path)
    np.testing.assert_array_equal(loaded.pairs, interactions.pairs)


def test_invalid_utf8_reports_line(tmp_path):
    path = tmp_path / "inter.tsv"
    path.write_bytes(b"0\t1\n\xff\xfe\t2\n")
    with pytest.raises(ParseError) as info:
        load_interactions(path)
    assert info.value.line_no == 2
    assert info.value.exit_code == 2
