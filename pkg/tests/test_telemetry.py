import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyselect.errors import DataError, RowError, SchemaError, StreamValidationError
from skyselect.telemetry import (
    AOIS,
    FLIGHT_COLUMNS,
    GAZE_COLUMNS,
    UNKNOWN_AOI,
    Aoi,
    GazeStream,
    ParticipantRecord,
    flight_to_csv,
    gaze_to_csv,
    load_cohort,
    parse_flight_log,
    parse_gaze_log,
    write_flight_log,
    write_gaze_log,
    write_manifest,
)

from conftest import flight_row, gaze_row, to_csv


# ------------------------------------------------------------------ AOI names


def test_exactly_19_aois():
    assert len(AOIS) == 19
    assert len({a.value for a in AOIS}) == 19


def test_aoi_parse_print_round_trip():
    for a in AOIS:
        assert Aoi.parse(str(a)) is a
        assert Aoi.parse(a.slug) is a
        assert Aoi.from_code(a.code) is a


def test_aoi_parse_is_case_and_whitespace_insensitive():
    assert Aoi.parse("  Altitude   INDICATOR ") is Aoi.ALTITUDE_INDICATOR
    assert Aoi.parse("turn and slip indicator") is Aoi.TURN_AND_SLIP_INDICATOR


@pytest.mark.parametrize("text", ["", "altimeter", "altitude", None, "glass"])
def test_unknown_aoi_strings_never_map_to_a_member(text):
    assert Aoi.parse(text) is UNKNOWN_AOI


# ------------------------------------------------------------------ gaze log


def test_gaze_header_plus_one_row():
    s = parse_gaze_log(to_csv([gaze_row(0.0)], GAZE_COLUMNS))
    assert len(s) == 1
    assert s[0].aoi is Aoi.ATTITUDE_INDICATOR


def test_gaze_aoi_column_value_parsed():
    s = parse_gaze_log(to_csv([gaze_row(0.0, aoi="altitude indicator")], GAZE_COLUMNS))
    assert s[0].aoi is Aoi.ALTITUDE_INDICATOR


def test_gaze_equal_timestamps_rejected_with_row_index():
    with pytest.raises(StreamValidationError) as exc:
        parse_gaze_log(to_csv([gaze_row(1.0), gaze_row(1.0)], GAZE_COLUMNS))
    assert exc.value.row == 1


def test_gaze_missing_column_named():
    cols = [c for c in GAZE_COLUMNS if c != "EOL"]
    with pytest.raises(SchemaError) as exc:
        parse_gaze_log(to_csv([gaze_row(0.0)], cols))
    assert exc.value.column == "EOL"


def test_gaze_unparseable_cell_located():
    rows = [gaze_row(0.0), gaze_row(0.1, FVL_X="abc")]
    with pytest.raises(RowError) as exc:
        parse_gaze_log(to_csv(rows, GAZE_COLUMNS))
    assert (exc.value.row, exc.value.column) == (1, "FVL_X")


def test_gaze_column_order_free_and_eye_opening_clamped():
    cols = list(reversed(GAZE_COLUMNS))
    s = parse_gaze_log(to_csv([gaze_row(0.0, EOL=1.4, EOR=-0.2)], cols))
    assert s.eye_open_left[0] == 1.0 and s.eye_open_right[0] == 0.0


def test_gaze_unknown_aoi_kept_as_unknown():
    s = parse_gaze_log(to_csv([gaze_row(0.0, aoi="coffee cup")], GAZE_COLUMNS))
    assert s[0].aoi is UNKNOWN_AOI


def test_gaze_direction_out_of_range_rejected():
    with pytest.raises(StreamValidationError):
        parse_gaze_log(to_csv([gaze_row(0.0, FVL_Z=1.5)], GAZE_COLUMNS))


def test_gaze_parse_from_path(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text(to_csv([gaze_row(0.0), gaze_row(0.5)], GAZE_COLUMNS).getvalue())
    assert len(parse_gaze_log(p)) == 2


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        parse_gaze_log(tmp_path / "nope.csv")


# ------------------------------------------------------------------ flight log


def test_flight_header_plus_one_row():
    assert len(parse_flight_log(to_csv([flight_row(0.0)], FLIGHT_COLUMNS))) == 1


def test_flight_agl_below_noise_floor_rejected():
    with pytest.raises(StreamValidationError):
        parse_flight_log(to_csv([flight_row(0.0, agl=-2.0)], FLIGHT_COLUMNS))


def test_flight_agl_at_noise_floor_accepted():
    assert len(parse_flight_log(to_csv([flight_row(0.0, agl=-0.5)], FLIGHT_COLUMNS))) == 1


def test_flight_constant_position_three_rows():
    s = parse_flight_log(to_csv([flight_row(t, gs=0.0) for t in (0.0, 1.0, 2.0)], FLIGHT_COLUMNS))
    assert len(s) == 3
    assert np.all(s.gs == 0.0)
    assert s[2].nearest_ref == (120.0, 30.0, 15.0)


def test_flight_non_monotone_rejected():
    with pytest.raises(StreamValidationError) as exc:
        parse_flight_log(to_csv([flight_row(0.0), flight_row(2.0), flight_row(1.0)], FLIGHT_COLUMNS))
    assert exc.value.row == 2


def test_flight_roll_out_of_range_rejected():
    with pytest.raises(StreamValidationError):
        parse_flight_log(to_csv([flight_row(0.0, roll=190.0)], FLIGHT_COLUMNS))


# ------------------------------------------------------------------ round trip


def test_round_trip_of_generated_streams(expert_participant):
    rec = expert_participant.record
    assert parse_gaze_log(io.StringIO(gaze_to_csv(rec.gaze))) == rec.gaze
    assert parse_flight_log(io.StringIO(flight_to_csv(rec.flight))) == rec.flight


finite = st.floats(-1.0, 1.0, allow_nan=False, width=64)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(finite, finite, finite, st.integers(-1, 18), st.floats(0, 1)), min_size=1, max_size=20),
    st.floats(-1e6, 1e6, allow_nan=False),
)
def test_gaze_round_trip_property(rows, t0):
    t = t0 + np.arange(len(rows)) * 0.01
    if np.any(np.diff(t) <= 0):
        return
    d = np.array([r[:3] for r in rows])
    s = GazeStream.build(t, d, aoi=[r[3] for r in rows], eye_open_left=[r[4] for r in rows])
    buf = io.StringIO()
    write_gaze_log(s, buf)
    buf.seek(0)
    assert parse_gaze_log(buf) == s


def test_flight_round_trip_through_file(tmp_path, expert_participant):
    p = tmp_path / "f.csv"
    write_flight_log(expert_participant.record.flight, p)
    assert parse_flight_log(p) == expert_participant.record.flight


# ------------------------------------------------------------------ cohort


def _write_pair(tmp_path, pid):
    g, f = tmp_path / f"{pid}_g.csv", tmp_path / f"{pid}_f.csv"
    g.write_text(to_csv([gaze_row(0.0)], GAZE_COLUMNS).getvalue())
    f.write_text(to_csv([flight_row(0.0)], FLIGHT_COLUMNS).getvalue())
    return g.name, f.name


def test_load_cohort_two_rows(tmp_path):
    rows = [("A", 1, *_write_pair(tmp_path, "A")), ("B", 0, *_write_pair(tmp_path, "B"))]
    write_manifest(rows, tmp_path / "manifest.csv")
    c = load_cohort(tmp_path / "manifest.csv")
    assert len(c) == 2
    assert c.class_counts == (1, 1)
    rec = c.record(0)
    assert isinstance(rec, ParticipantRecord) and rec.participant_id == "A"


def test_load_cohort_duplicate_id(tmp_path):
    pair = _write_pair(tmp_path, "A")
    write_manifest([("A", 1, *pair), ("A", 0, *pair)], tmp_path / "m.csv")
    with pytest.raises(DataError, match="duplicate"):
        load_cohort(tmp_path / "m.csv")


def test_load_cohort_missing_file(tmp_path):
    write_manifest([("A", 1, "nope_g.csv", "nope_f.csv")], tmp_path / "m.csv")
    with pytest.raises(RowError, match="not found"):
        load_cohort(tmp_path / "m.csv")


def test_load_cohort_bad_label(tmp_path):
    write_manifest([("A", 2, *_write_pair(tmp_path, "A"))], tmp_path / "m.csv")
    with pytest.raises(RowError) as exc:
        load_cohort(tmp_path / "m.csv")
    assert exc.value.column == "label"


def test_load_cohort_46_rows(tmp_path):
    pair = _write_pair(tmp_path, "X")
    rows = [(f"E{i:02d}", 1, *pair) for i in range(23)] + [(f"N{i:02d}", 0, *pair) for i in range(23)]
    write_manifest(rows, tmp_path / "m.csv")
    assert load_cohort(tmp_path / "m.csv").class_counts == (23, 23)


def test_record_requires_non_empty_streams(expert_participant):
    rec = expert_participant.record
    empty = GazeStream.build(np.zeros(0), np.zeros((0, 3)))
    with pytest.raises(DataError):
        ParticipantRecord("X", 1, empty, rec.flight)
