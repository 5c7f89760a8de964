import io
import shutil

import numpy as np
import pytest

from skyselect.errors import ConfigError, DataError, RowError
from skyselect.registry import (
    ALL_COMBOS,
    ALL_FEATURES,
    FEATURES,
    FULL,
    DatasetCombo,
    FeatureMatrix,
    combo_columns,
    extract_cohort,
    features_to_csv,
    read_features,
    registry_digest,
    registry_index,
)
from skyselect.telemetry import load_cohort, write_flight_log

from test_flight_features import make_flight


def test_source_sizes():
    assert [len(FEATURES[s]) for s in ("AOI", "EM", "QAR")] == [19, 7, 37]
    assert len(ALL_FEATURES) == 63
    assert len(set(ALL_FEATURES)) == 63


def test_seven_combos_and_their_sizes():
    assert len(ALL_COMBOS) == 7
    sizes = {c.name: len(c.features) for c in ALL_COMBOS}
    assert sizes == {
        "AOI": 19, "EM": 7, "QAR": 37, "AOI&EM": 26, "AOI&QAR": 56, "EM&QAR": 44, "AOI&EM&QAR": 63,
    }


def test_combo_features_keep_registry_order():
    for c in ALL_COMBOS:
        idx = [registry_index(f) for f in c.features]
        assert idx == sorted(idx)


@pytest.mark.parametrize("text", ["AOI&EM&QAR", "all", "qar,em,aoi", "aoi+em+qar", "aoi_em_qar"])
def test_combo_parse_full(text):
    assert DatasetCombo.parse(text) == FULL


def test_combo_parse_rejects_unknown_and_empty():
    with pytest.raises(ConfigError):
        DatasetCombo.parse("aoi,eeg")
    with pytest.raises(ConfigError):
        DatasetCombo.parse("")


def test_combo_name_and_slug():
    c = DatasetCombo.parse("qar&aoi")
    assert (c.name, c.slug) == ("AOI&QAR", "aoi_qar")


def test_unknown_feature_index():
    with pytest.raises(ConfigError):
        registry_index("em.saccade_count")


def test_registry_digest_stable():
    assert registry_digest() == registry_digest()
    assert len(registry_digest()) == 64


def test_combo_columns_csv():
    lines = combo_columns().splitlines()
    assert lines[0] == "combo,feature"
    assert len(lines) == 1 + 19 + 7 + 37 + 26 + 56 + 44 + 63


# ------------------------------------------------------------------ matrix


def test_matrix_shape_checked():
    with pytest.raises(DataError):
        FeatureMatrix(("a", "b"), np.zeros((2, 3)), np.array([0, 1]), ("x", "y"))
    with pytest.raises(DataError):
        FeatureMatrix(("a",), np.zeros((1, 1)), np.array([2]), ("x",))


def test_matrix_columns_and_rows():
    fm = FeatureMatrix(("a", "b"), np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1, 0]), ("x", "y"))
    sub = fm.columns(["y"])
    assert sub.names == ("y",) and sub.X[:, 0].tolist() == [2.0, 4.0]
    assert fm.rows([1]).ids == ("b",)
    with pytest.raises(ConfigError):
        fm.columns(["z"])


# ------------------------------------------------------------------ extraction and CSV


def test_extracted_matrix(small_features):
    fm = small_features
    assert fm.X.shape == (6, 63)
    assert fm.class_counts() == (3, 3)
    assert np.isfinite(fm.X).all()
    aoi = fm.for_combo(DatasetCombo.parse("AOI")).X
    assert np.all((aoi >= 0) & (aoi <= 1))
    assert np.all(aoi.sum(axis=1) <= 1 + 1e-9)


def test_parallel_extraction_matches_serial(small_cohort_dir, small_features):
    assert extract_cohort(load_cohort(small_cohort_dir), jobs=2).equals(small_features)


def test_features_csv_round_trip(small_features):
    text = features_to_csv(small_features)
    back = read_features(io.StringIO(text))
    assert back.ids == small_features.ids and back.names == ALL_FEATURES
    assert np.allclose(back.X, small_features.X, rtol=1e-8, atol=0)
    assert features_to_csv(back) == text


def test_features_csv_header_and_nan():
    fm = FeatureMatrix(("a", "b"), np.array([[np.nan, 1 / 3], [2.0, 1e-12]]), np.array([1, 0]),
                       ("em.sd_fix_x", "em.sd_fix_y"))
    text = features_to_csv(fm)
    assert text.splitlines() == [
        "participant_id,label,em.sd_fix_x,em.sd_fix_y",
        "a,1,,0.333333333",
        "b,0,2,1e-12",
    ]
    back = read_features(io.StringIO(text))
    assert np.isnan(back.X[0, 0])


def test_read_features_errors():
    with pytest.raises(DataError, match="unknown feature"):
        read_features(io.StringIO("participant_id,label,bogus\na,1,2\n"))
    with pytest.raises(RowError):
        read_features(io.StringIO("participant_id,label,em.sd_fix_x\na,1,abc\n"))
    with pytest.raises(RowError):
        read_features(io.StringIO("participant_id,label,em.sd_fix_x\na,3,1\n"))


def test_unlandable_flight_fails_whole_extraction(small_cohort_dir, tmp_path):
    root = tmp_path / "c"
    shutil.copytree(small_cohort_dir.parent, root)
    t = np.arange(0.0, 30.0, 0.1)
    write_flight_log(make_flight(t, np.full(len(t), 2.0)), root / "flight" / "N02.csv")
    with pytest.raises(DataError) as exc:
        extract_cohort(load_cohort(root / "manifest.csv"))
    assert "N02" in str(exc.value) and "never airborne" in str(exc.value)
