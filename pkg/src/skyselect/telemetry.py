"""Typed access to the raw eye-tracking and flight-dynamics logs.

Both logs are comma-separated tables with a mandatory header. Column order is
free; column names are fixed (see ``GAZE_COLUMNS`` and ``FLIGHT_COLUMNS``).
Extra columns are ignored.

Streams are stored column-wise as read-only numpy arrays. They still behave as
sequences: ``len(stream)``, ``stream[i]`` (a ``GazeSample``/``FlightSample``)
and iteration all work.
"""

from __future__ import annotations

import enum
import io
import logging
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterator, Sequence, Union

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.csv as pacsv

from .errors import DataError, RowError, SchemaError, StreamValidationError

log = logging.getLogger(__name__)

Source = Union[str, Path, IO[str]]


# --------------------------------------------------------------------------- AOIs


class Aoi(enum.Enum):
    """The 19 cockpit areas of interest, valued by their display name."""

    AIRCRAFT_CLOCKS = "aircraft clocks"
    AIRSPEED_INDICATOR = "airspeed indicator"
    ATTITUDE_INDICATOR = "attitude indicator"
    VERTICAL_SPEED_INDICATOR = "vertical speed indicator"
    RADIO_COMPASS = "radio compass"
    INLET_PRESSURE_GAUGE = "inlet pressure gauge"
    ALTITUDE_INDICATOR = "altitude indicator"
    TURN_AND_SLIP_INDICATOR = "turn-and-slip indicator"
    AIRCRAFT_TRI_USE_METER = "aircraft tri-use meter"
    MAGNETIC_COURSE_CORRECTION_CALCULATOR = "magnetic course correction calculator"
    TACHOMETER = "tachometer"
    CYLINDER_HEAD_THERMOMETER = "cylinder head thermometer"
    AIR_INLET_TEMPERATURE_INDICATOR = "air inlet temperature indicator"
    CURRENT_AND_VOLTAGE_METERS = "current and voltage meters"
    TANK_PRESSURE_GAUGE = "tank pressure gauge"
    SPARE_MAGNETIC_COMPASS = "spare magnetic compass"
    LEFT_COCKPIT_GLASS = "left aircraft cockpit glass"
    FRONT_COCKPIT_GLASS = "front aircraft cockpit glass"
    RIGHT_COCKPIT_GLASS = "right aircraft cockpit glass"

    @property
    def slug(self) -> str:
        return self.name.lower()

    @property
    def code(self) -> int:
        return _AOI_CODE[self]

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str | None) -> "Aoi | UnknownAoi":
        """Case/whitespace/punctuation-insensitive lookup.

        Accepts display names ("Altitude Indicator") and slugs
        ("altitude_indicator"). Anything else, including an empty cell, is
        ``UNKNOWN_AOI``.
        """
        if text is None:
            return UNKNOWN_AOI
        return _AOI_LOOKUP.get(_normalise(text), UNKNOWN_AOI)

    @classmethod
    def from_code(cls, code: int) -> "Aoi | UnknownAoi":
        return AOIS[code] if code >= 0 else UNKNOWN_AOI


class UnknownAoi:
    """Gaze on no recognised AOI. Counts toward total gaze time only."""

    _instance: "UnknownAoi | None" = None
    slug = "unknown"
    value = ""
    code = -1

    def __new__(cls) -> "UnknownAoi":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNKNOWN_AOI"

    def __str__(self) -> str:
        return ""

    def __reduce__(self):
        return (UnknownAoi, ())


UNKNOWN_AOI = UnknownAoi()
AOIS: tuple[Aoi, ...] = tuple(Aoi)
_AOI_CODE = {a: i for i, a in enumerate(AOIS)}


def _normalise(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", " ", text.lower()).strip()


_AOI_LOOKUP: dict[str, Aoi] = {}
for _a in AOIS:
    _AOI_LOOKUP[_normalise(_a.value)] = _a
    _AOI_LOOKUP[_normalise(_a.slug)] = _a


def _parse_aoi_column(values: Sequence[str]) -> np.ndarray:
    cache: dict[str, int] = {}
    out = np.empty(len(values), dtype=np.int8)
    for i, v in enumerate(values):
        code = cache.get(v)
        if code is None:
            code = cache[v] = Aoi.parse(v).code
        out[i] = code
    return out


# --------------------------------------------------------------------- schemas

GAZE_COLUMNS: tuple[str, ...] = (
    "timestamp",
    "FOL_X", "FOL_Y", "FOL_Z", "FOR_X", "FOR_Y", "FOR_Z",
    "FVL_X", "FVL_Y", "FVL_Z", "FVR_X", "FVR_Y", "FVR_Z",
    "EOL", "EOR",
    "PPLX", "PPLY", "PPRX", "PPRY",
    "AOIName",
)

FLIGHT_COLUMNS: tuple[str, ...] = (
    "timestamp", "roll", "pitch", "yaw",
    "longitude", "latitude", "agl", "asl",
    "tas", "gs", "vertical_speed", "aoa",
    "rudder_input", "elevator_input", "roll_input",
    "nearest_ref_longitude", "nearest_ref_latitude", "nearest_ref_height",
)

MANIFEST_COLUMNS: tuple[str, ...] = ("participant_id", "label", "gaze_path", "flight_path")

AGL_NOISE_FLOOR = -0.5


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GazeSample:
    timestamp: float
    gaze_origin_left: tuple[float, float, float]
    gaze_origin_right: tuple[float, float, float]
    gaze_dir_left: tuple[float, float, float]
    gaze_dir_right: tuple[float, float, float]
    eye_open_left: float
    eye_open_right: float
    pupil_pos_left: tuple[float, float]
    pupil_pos_right: tuple[float, float]
    aoi: Aoi | UnknownAoi


@dataclass(frozen=True)
class FlightSample:
    timestamp: float
    roll: float
    pitch: float
    yaw: float
    longitude: float
    latitude: float
    agl: float
    asl: float
    tas: float
    gs: float
    vertical_speed: float
    aoa: float
    rudder_input: float
    elevator_input: float
    roll_input: float
    nearest_ref: tuple[float, float, float]


class _Stream:
    """Shared sequence behaviour for the column-wise streams."""

    timestamp: np.ndarray

    def __post_init__(self) -> None:
        for f in fields(self):
            object.__setattr__(self, f.name, _readonly(getattr(self, f.name)))

    def __len__(self) -> int:
        return len(self.timestamp)

    def __iter__(self) -> Iterator:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in fields(self)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def duration(self) -> float:
        return float(self.timestamp[-1] - self.timestamp[0]) if len(self) else 0.0

    def shifted(self, dt: float):
        """Copy with every timestamp offset by ``dt`` seconds."""
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw["timestamp"] = self.timestamp + dt
        return type(self)(**kw)


@dataclass(frozen=True, eq=False)
class GazeStream(_Stream):
    timestamp: np.ndarray
    gaze_origin_left: np.ndarray  # (n, 3) mm
    gaze_origin_right: np.ndarray
    gaze_dir_left: np.ndarray  # (n, 3) in [-1, 1]
    gaze_dir_right: np.ndarray
    eye_open_left: np.ndarray
    eye_open_right: np.ndarray
    pupil_pos_left: np.ndarray  # (n, 2)
    pupil_pos_right: np.ndarray
    aoi: np.ndarray  # int8 codes into AOIS, -1 = unknown

    def __getitem__(self, i: int) -> GazeSample:
        return GazeSample(
            timestamp=float(self.timestamp[i]),
            gaze_origin_left=tuple(map(float, self.gaze_origin_left[i])),
            gaze_origin_right=tuple(map(float, self.gaze_origin_right[i])),
            gaze_dir_left=tuple(map(float, self.gaze_dir_left[i])),
            gaze_dir_right=tuple(map(float, self.gaze_dir_right[i])),
            eye_open_left=float(self.eye_open_left[i]),
            eye_open_right=float(self.eye_open_right[i]),
            pupil_pos_left=tuple(map(float, self.pupil_pos_left[i])),
            pupil_pos_right=tuple(map(float, self.pupil_pos_right[i])),
            aoi=Aoi.from_code(int(self.aoi[i])),
        )

    @classmethod
    def from_samples(cls, samples: Sequence[GazeSample]) -> "GazeStream":
        s = list(samples)
        return cls(
            timestamp=np.array([x.timestamp for x in s], dtype=float),
            gaze_origin_left=np.array([x.gaze_origin_left for x in s], dtype=float).reshape(-1, 3),
            gaze_origin_right=np.array([x.gaze_origin_right for x in s], dtype=float).reshape(-1, 3),
            gaze_dir_left=np.array([x.gaze_dir_left for x in s], dtype=float).reshape(-1, 3),
            gaze_dir_right=np.array([x.gaze_dir_right for x in s], dtype=float).reshape(-1, 3),
            eye_open_left=np.array([x.eye_open_left for x in s], dtype=float),
            eye_open_right=np.array([x.eye_open_right for x in s], dtype=float),
            pupil_pos_left=np.array([x.pupil_pos_left for x in s], dtype=float).reshape(-1, 2),
            pupil_pos_right=np.array([x.pupil_pos_right for x in s], dtype=float).reshape(-1, 2),
            aoi=np.array([x.aoi.code for x in s], dtype=np.int8),
        )

    @classmethod
    def build(
        cls,
        timestamp,
        gaze_dir_left,
        *,
        aoi=None,
        eye_open_left=None,
        gaze_dir_right=None,
        eye_open_right=None,
        gaze_origin_left=None,
        gaze_origin_right=None,
        pupil_pos_left=None,
        pupil_pos_right=None,
    ) -> "GazeStream":
        """Convenience constructor filling unspecified columns with neutral values."""
        t = np.asarray(timestamp, dtype=float)
        n = len(t)
        d = np.asarray(gaze_dir_left, dtype=float).reshape(n, 3)

        def col(v, shape, fill=0.0):
            return np.full(shape, fill) if v is None else np.asarray(v, dtype=float).reshape(shape)

        if aoi is None:
            codes = np.full(n, -1, dtype=np.int8)
        else:
            codes = np.array(
                [a if isinstance(a, (int, np.integer)) else (a.code if hasattr(a, "code") else Aoi.parse(a).code) for a in aoi],
                dtype=np.int8,
            )
        return cls(
            timestamp=t,
            gaze_origin_left=col(gaze_origin_left, (n, 3)),
            gaze_origin_right=col(gaze_origin_right, (n, 3)),
            gaze_dir_left=d,
            gaze_dir_right=d.copy() if gaze_dir_right is None else col(gaze_dir_right, (n, 3)),
            eye_open_left=col(eye_open_left, (n,), 1.0),
            eye_open_right=col(eye_open_right, (n,), 1.0),
            pupil_pos_left=col(pupil_pos_left, (n, 2)),
            pupil_pos_right=col(pupil_pos_right, (n, 2)),
            aoi=codes,
        )


@dataclass(frozen=True, eq=False)
class FlightStream(_Stream):
    timestamp: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    yaw: np.ndarray
    longitude: np.ndarray
    latitude: np.ndarray
    agl: np.ndarray
    asl: np.ndarray
    tas: np.ndarray
    gs: np.ndarray
    vertical_speed: np.ndarray
    aoa: np.ndarray
    rudder_input: np.ndarray
    elevator_input: np.ndarray
    roll_input: np.ndarray
    nearest_ref: np.ndarray  # (n, 3): longitude, latitude, height

    def __getitem__(self, i: int) -> FlightSample:
        kw = {f.name: float(getattr(self, f.name)[i]) for f in fields(self) if f.name != "nearest_ref"}
        return FlightSample(**kw, nearest_ref=tuple(map(float, self.nearest_ref[i])))

    @classmethod
    def from_samples(cls, samples: Sequence[FlightSample]) -> "FlightStream":
        s = list(samples)
        kw = {
            f.name: np.array([getattr(x, f.name) for x in s], dtype=float)
            for f in fields(FlightSample)
            if f.name != "nearest_ref"
        }
        return cls(**kw, nearest_ref=np.array([x.nearest_ref for x in s], dtype=float).reshape(-1, 3))


# ---------------------------------------------------------------------- parsing


def _source_name(source: Source) -> str:
    if isinstance(source, (str, Path)):
        return str(source)
    return getattr(source, "name", "<stream>")


def _read_frame(source: Source, name: str, **kw) -> pd.DataFrame:
    try:
        df = pd.read_csv(source, keep_default_na=False, **kw)
    except FileNotFoundError:
        raise DataError(f"{name}: file not found") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"{name}: empty file (a header row is required)") from None
    except (pd.errors.ParserError, ValueError) as exc:
        raise DataError(f"{name}: malformed CSV: {exc}") from None
    df.columns = [str(c).strip() for c in df.columns]
    return df


def _read_table(
    source: Source, required: Sequence[str], text_columns: Sequence[str] = ()
) -> tuple[pd.DataFrame, dict[str, np.ndarray], str]:
    """Read a log table; return the frame, its numeric columns as float arrays, and a display name.

    The fast path lets pyarrow parse numbers (exact, round-trip safe). If any
    required numeric column fails to come back numeric, the table is re-read
    as text so the offending cell can be located.
    """
    name = _source_name(source)
    rewind = None
    if not isinstance(source, (str, Path)):
        try:
            rewind = source.tell()
        except (AttributeError, OSError):
            source = io.StringIO(source.read())
            rewind = 0
    numeric = [c for c in required if c not in text_columns]
    df = _read_frame(source, name, engine="pyarrow", dtype={c: str for c in text_columns})
    for c in required:
        if c not in df.columns:
            raise SchemaError(c, name)
    out: dict[str, np.ndarray] = {}
    slow = False
    for c in numeric:
        col = df[c]
        if not (pd.api.types.is_float_dtype(col) or pd.api.types.is_integer_dtype(col)):
            slow = True
            break
        out[c] = col.to_numpy(dtype=float)
    if slow:
        if rewind is not None:
            source.seek(rewind)
        raw = _read_frame(source, name, dtype=str, na_filter=False)
        out = {c: _numeric(raw, c, name) for c in numeric}
    for c in numeric:
        bad = np.flatnonzero(~np.isfinite(out[c]))
        if bad.size:
            i = int(bad[0])
            raise RowError(i, c, f"non-finite value {out[c][i]!r}", name)
    return df, out, name


def _numeric(df: pd.DataFrame, column: str, source: str) -> np.ndarray:
    raw = df[column]
    vals = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise RowError(i, column, f"cannot parse {raw.iloc[i]!r} as a finite number", source)
    return vals


def _check_monotone(t: np.ndarray, source: str) -> None:
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise StreamValidationError(
            i, f"timestamp {t[i]!r} does not increase (previous {t[i - 1]!r})", source
        )


def _check_range(v: np.ndarray, lo: float, hi: float, column: str, source: str) -> None:
    bad = np.flatnonzero((v < lo) | (v > hi))
    if bad.size:
        i = int(bad[0])
        raise StreamValidationError(i, f"{column}={v[i]!r} outside [{lo}, {hi}]", source)


def parse_gaze_log(source: Source) -> GazeStream:
    """Parse an eye-tracker log into a ``GazeStream``.

    Direction components must lie in [-1, 1]; an all-zero direction marks
    tracking loss and is kept (fixation detection skips it). Eye-opening
    values are clamped to [0, 1].
    """
    df, num, name = _read_table(source, GAZE_COLUMNS, text_columns=("AOIName",))
    t = num["timestamp"]
    _check_monotone(t, name)
    for c in ("FVL_X", "FVL_Y", "FVL_Z", "FVR_X", "FVR_Y", "FVR_Z"):
        _check_range(num[c], -1.0, 1.0, c, name)

    def stack(*cols):
        return np.column_stack([num[c] for c in cols])

    stream = GazeStream(
        timestamp=t,
        gaze_origin_left=stack("FOL_X", "FOL_Y", "FOL_Z"),
        gaze_origin_right=stack("FOR_X", "FOR_Y", "FOR_Z"),
        gaze_dir_left=stack("FVL_X", "FVL_Y", "FVL_Z"),
        gaze_dir_right=stack("FVR_X", "FVR_Y", "FVR_Z"),
        eye_open_left=np.clip(num["EOL"], 0.0, 1.0),
        eye_open_right=np.clip(num["EOR"], 0.0, 1.0),
        pupil_pos_left=stack("PPLX", "PPLY"),
        pupil_pos_right=stack("PPRX", "PPRY"),
        aoi=_parse_aoi_column(df["AOIName"].astype(str).tolist()),
    )
    log.debug("%s: parsed %d gaze rows", name, len(stream))
    return stream


def parse_flight_log(source: Source) -> FlightStream:
    """Parse a simulator flight-dynamics log into a ``FlightStream``."""
    _, num, name = _read_table(source, FLIGHT_COLUMNS)
    _check_monotone(num["timestamp"], name)
    bad = np.flatnonzero(num["agl"] < AGL_NOISE_FLOOR)
    if bad.size:
        i = int(bad[0])
        raise StreamValidationError(i, f"agl={num['agl'][i]!r} below noise floor {AGL_NOISE_FLOOR} m", name)
    _check_range(num["roll"], -180.0, 180.0, "roll", name)
    _check_range(num["pitch"], -180.0, 180.0, "pitch", name)
    for c in ("rudder_input", "elevator_input", "roll_input"):
        _check_range(num[c], -1.0, 1.0, c, name)
    stream = FlightStream(
        **{c: num[c] for c in FLIGHT_COLUMNS[:15]},
        nearest_ref=np.column_stack(
            [num["nearest_ref_longitude"], num["nearest_ref_latitude"], num["nearest_ref_height"]]
        ),
    )
    log.debug("%s: parsed %d flight rows", name, len(stream))
    return stream


# ---------------------------------------------------------------------- writing


def _gaze_frame(stream: GazeStream) -> pd.DataFrame:
    cols: dict[str, object] = {"timestamp": stream.timestamp}
    for prefix, arr in (
        ("FOL", stream.gaze_origin_left),
        ("FOR", stream.gaze_origin_right),
        ("FVL", stream.gaze_dir_left),
        ("FVR", stream.gaze_dir_right),
    ):
        for k, axis in enumerate("XYZ"):
            cols[f"{prefix}_{axis}"] = arr[:, k]
    cols["EOL"] = stream.eye_open_left
    cols["EOR"] = stream.eye_open_right
    cols["PPLX"], cols["PPLY"] = stream.pupil_pos_left[:, 0], stream.pupil_pos_left[:, 1]
    cols["PPRX"], cols["PPRY"] = stream.pupil_pos_right[:, 0], stream.pupil_pos_right[:, 1]
    names = np.array([a.value for a in AOIS] + [""], dtype=object)
    cols["AOIName"] = names[stream.aoi.astype(np.int64)]  # -1 indexes the trailing ""
    return pd.DataFrame(cols, columns=list(GAZE_COLUMNS))


def _flight_frame(stream: FlightStream) -> pd.DataFrame:
    cols = {c: getattr(stream, c) for c in FLIGHT_COLUMNS[:15]}
    cols["nearest_ref_longitude"] = stream.nearest_ref[:, 0]
    cols["nearest_ref_latitude"] = stream.nearest_ref[:, 1]
    cols["nearest_ref_height"] = stream.nearest_ref[:, 2]
    return pd.DataFrame(cols, columns=list(FLIGHT_COLUMNS))


def _write(df: pd.DataFrame, dest: Source) -> None:
    """CSV with an unquoted header; floats in shortest round-trip form."""
    table = pa.Table.from_pandas(df, preserve_index=False)
    buf = io.BytesIO()
    buf.write((",".join(df.columns) + "\n").encode())
    pacsv.write_csv(table, buf, pacsv.WriteOptions(include_header=False, quoting_style="none"))
    data = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_bytes(data)
    else:
        dest.write(data.decode())


def write_gaze_log(stream: GazeStream, dest: Source) -> None:
    _write(_gaze_frame(stream), dest)


def write_flight_log(stream: FlightStream, dest: Source) -> None:
    _write(_flight_frame(stream), dest)


def gaze_to_csv(stream: GazeStream) -> str:
    buf = io.StringIO()
    write_gaze_log(stream, buf)
    return buf.getvalue()


def flight_to_csv(stream: FlightStream) -> str:
    buf = io.StringIO()
    write_flight_log(stream, buf)
    return buf.getvalue()


# ----------------------------------------------------------------------- cohort


@dataclass(frozen=True)
class ParticipantRecord:
    participant_id: str
    label: int  # 1 = expert, 0 = novice
    gaze: GazeStream
    flight: FlightStream

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise DataError(f"{self.participant_id}: label must be 0 or 1, got {self.label!r}")
        if len(self.gaze) == 0 or len(self.flight) == 0:
            raise DataError(f"{self.participant_id}: empty gaze or flight stream")


@dataclass(frozen=True)
class CohortEntry:
    participant_id: str
    label: int
    gaze_path: Path
    flight_path: Path

    def load(self) -> ParticipantRecord:
        return ParticipantRecord(
            self.participant_id,
            self.label,
            parse_gaze_log(self.gaze_path),
            parse_flight_log(self.flight_path),
        )


class Cohort(Sequence[CohortEntry]):
    """Labelled participant set backed by log files.

    Entries are validated eagerly; the logs themselves are parsed on demand
    (``entry.load()`` or ``cohort.record(i)``) because a full cohort of
    120 Hz gaze logs does not fit comfortably in memory.
    """

    def __init__(self, entries: Sequence[CohortEntry]):
        seen: set[str] = set()
        for e in entries:
            if e.participant_id in seen:
                raise DataError(f"duplicate participant_id {e.participant_id!r}")
            seen.add(e.participant_id)
        self.entries = tuple(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):  # type: ignore[override]
        return self.entries[i]

    def record(self, i: int) -> ParticipantRecord:
        return self.entries[i].load()

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.entries], dtype=int)

    @property
    def class_counts(self) -> tuple[int, int]:
        """(experts, novices)."""
        y = self.labels
        return int((y == 1).sum()), int((y == 0).sum())


def load_cohort(manifest: Source) -> Cohort:
    """Read a manifest (participant_id,label,gaze_path,flight_path).

    Relative log paths resolve against the manifest's directory.
    """
    df, _, name = _read_table(manifest, MANIFEST_COLUMNS, text_columns=MANIFEST_COLUMNS)
    base = Path(manifest).parent if isinstance(manifest, (str, Path)) else Path.cwd()
    entries = []
    seen: set[str] = set()
    for i, row in enumerate(df.itertuples(index=False)):
        pid = str(row.participant_id).strip()
        if not pid:
            raise RowError(i, "participant_id", "empty participant id", name)
        if pid in seen:
            raise RowError(i, "participant_id", f"duplicate participant_id {pid!r}", name)
        seen.add(pid)
        if str(row.label).strip() not in ("0", "1"):
            raise RowError(i, "label", f"label must be 0 or 1, got {row.label!r}", name)
        paths = []
        for col in ("gaze_path", "flight_path"):
            p = Path(str(getattr(row, col)).strip())
            if not p.is_absolute():
                p = base / p
            if not p.is_file():
                raise RowError(i, col, f"file not found: {p}", name)
            paths.append(p)
        entries.append(CohortEntry(pid, int(str(row.label).strip()), paths[0], paths[1]))
    return Cohort(entries)


def write_manifest(rows: Sequence[tuple[str, int, str, str]], dest: Source) -> None:
    df = pd.DataFrame(list(rows), columns=list(MANIFEST_COLUMNS))
    _write(df, dest)
