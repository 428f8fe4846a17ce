import numpy as np
import pytest

from milk.datamodel.features import (
    FEATURE_MAGIC,
    AvailabilityMask,
    ModalityFeatureBank,
    align_features,
    load_feature_matrix,
    load_features,
    load_mask,
    write_feature_matrix,
    write_mask,
)
from milk.datamodel.interactions import InteractionSet
from milk.errors import DataError, DimensionError, ParseError


def test_binary_matrix_is_stored_as_float32(tmp_path, rng):
    matrix = rng.standard_normal((7, 3))
    path = tmp_path / "m.mfea"
    write_feature_matrix(matrix, path)

    blob = path.read_bytes()
    assert blob[:8] == FEATURE_MAGIC
    assert np.frombuffer(blob, dtype="<u4", count=2, offset=8).tolist() == [7, 3]
    np.testing.assert_array_equal(load_feature_matrix(path), matrix.astype(np.float32).astype(np.float64))


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.mfea"
    path.write_bytes(b"NOPE0001" + bytes(8))
    with pytest.raises(DataError):
        load_feature_matrix(path)


def test_truncated_binary(tmp_path):
    path = tmp_path / "m.mfea"
    write_feature_matrix(np.ones((4, 2)), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(DimensionError):
        load_feature_matrix(path)


def test_csv_features(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4\n", encoding="utf-8")
    np.testing.assert_array_equal(load_feature_matrix(path), [[1.0, 2.0], [3.0, 4.0]])

    path.write_text("1,2\n3\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_feature_matrix(path)


def test_expected_rows(tmp_path):
    path = tmp_path / "m.mfea"
    write_feature_matrix(np.ones((4, 2)), path)
    with pytest.raises(DimensionError):
        load_features([path], expected_rows=5)


def test_bank_rejects_non_finite_and_mismatched_rows():
    with pytest.raises(DataError):
        ModalityFeatureBank([np.array([[np.nan]])])
    with pytest.raises(DimensionError):
        ModalityFeatureBank([np.ones((3, 2)), np.ones((4, 2))])


def test_mask_validation():
    with pytest.raises(DataError):
        AvailabilityMask(np.array([[1, 0], [0, 0]]))
    with pytest.raises(DataError):
        AvailabilityMask(np.array([[1, 2]]))
    mask = AvailabilityMask(np.array([[1, 0], [1, 1], [0, 1]]))
    assert mask.missing_counts().tolist() == [1, 0, 1]


def test_mask_file_round_trip(tmp_path):
    mask = AvailabilityMask(np.array([[1, 0], [1, 1], [0, 1]]))
    path = tmp_path / "mask.csv"
    write_mask(mask, path)
    np.testing.assert_array_equal(load_mask(path).entries, mask.entries)


def test_align_features_uses_raw_ids():
    bank = ModalityFeatureBank([np.arange(10, dtype=float).reshape(10, 1)])
    interactions = InteractionSet(1, 2, np.array([[0, 0], [0, 1]]), raw_item_ids=np.array([3, 8]))
    aligned = align_features(bank, interactions)
    assert aligned.matrices[0][:, 0].tolist() == [3.0, 8.0]


def test_align_features_too_few_rows():
    bank = ModalityFeatureBank([np.ones((2, 1))])
    interactions = InteractionSet(1, 3, np.array([[0, 2]]))
    with pytest.raises(DimensionError):
        align_features(bank, interactions)


def test_mask_file_is_plain_integer_csv(tmp_path):
    path = tmp_path / "mask.csv"
    write_mask(AvailabilityMask(np.array([[1, 0], [1, 1]])), path)
    assert path.read_text(encoding="utf-8").splitlines() == ["1,0", "1,1"]


@pytest.mark.parametrize("text", ["1,0\n1\n", "1,0\n0.5,1\n", "1,x\n"])
def test_malformed_mask_files(tmp_path, text):
    path = tmp_path / "mask.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ParseError):
        load_mask(path)


def test_empty_mask_file(tmp_path):
    path = tmp_path / "mask.csv"
    path.write_text("\n", encoding="utf-8")
    with pytest.raises(DimensionError):
        load_mask(path)


@pytest.mark.parametrize("loader,name", [(load_mask, "mask.csv"), (load_feature_matrix, "m.csv")])
def test_invalid_utf8_in_csv_files(tmp_path, loader, name):
    path = tmp_path / name
    path.write_bytes(b"1,0\n1,1\n\xff,1\n")
    with pytest.raises(ParseError) as info:
        loader(path)
    assert info.value.line_no == 3


def test_single_row_csv_keeps_two_dimensions(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.5,2,3\n", encoding="utf-8")
    assert load_feature_matrix(path).shape == (1, 3)
