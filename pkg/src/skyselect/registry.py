"""Named, ordered feature set and the per-participant feature matrix.

Features are addressed as ``<source>.<name>``: ``aoi.<aoi slug>`` (19
percent-dwell fractions), ``em.<name>`` (7 eye-movement features) and
``qar.<name>`` (37 flight-dynamics features, the 36 enumerable QAR scalars
plus total flight time).

``saccade_count`` is computed by the eye-feature extractor but is not part
of the EM set: it equals ``fixation_count - 1`` on any stream that starts
and ends inside a fixation, so the two are collinear and only the
fixation count is kept.
"""

from __future__ import annotations

import hashlib
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, RowError, SchemaError
from .eye_features import extract_aoi_features, extract_em_features
from .flight_features import QarFeatures, extract_qar_features
from .telemetry import AOIS, Cohort, CohortEntry, ParticipantRecord

log = logging.getLogger(__name__)

SOURCES: tuple[str, ...] = ("AOI", "EM", "QAR")

EM_NAMES: tuple[str, ...] = (
    "sd_fix_x",
    "sd_fix_y",
    "sd_fix_z",
    "eye_opening_mean",
    "aoi_transition_freq",
    "fixation_duration_mean",
    "fixation_count",
)

FEATURES: dict[str, tuple[str, ...]] = {
    "AOI": tuple(f"aoi.{a.slug}" for a in AOIS),
    "EM": tuple(f"em.{n}" for n in EM_NAMES),
    "QAR": tuple(f"qar.{n}" for n in QarFeatures.names()),
}
ALL_FEATURES: tuple[str, ...] = FEATURES["AOI"] + FEATURES["EM"] + FEATURES["QAR"]
_INDEX = {n: i for i, n in enumerate(ALL_FEATURES)}


def registry_index(name: str) -> int:
    try:
        return _INDEX[name]
    except KeyError:
        raise ConfigError(f"unknown feature {name!r}") from None


def registry_digest() -> str:
    """SHA-256 over the ordered feature names."""
    return hashlib.sha256("\n".join(ALL_FEATURES).encode()).hexdigest()


@dataclass(frozen=True)
class DatasetCombo:
    """Non-empty subset of the three feature sources."""

    sources: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.sources:
            raise ConfigError("a dataset combination needs at least one source")
        bad = [s for s in self.sources if s not in SOURCES]
        if bad:
            raise ConfigError(f"unknown dataset source(s) {bad}; choose from {list(SOURCES)}")
        object.__setattr__(self, "sources", tuple(s for s in SOURCES if s in self.sources))

    @classmethod
    def parse(cls, text: str) -> "DatasetCombo":
        """Accepts ``AOI&EM&QAR``, ``aoi,em``, ``em+qar``, ``all``."""
        t = text.strip().upper()
        if t == "ALL":
            return cls(SOURCES)
        parts = [p for p in t.replace("&", ",").replace("+", ",").replace("_", ",").split(",") if p]
        return cls(tuple(parts))

    @property
    def name(self) -> str:
        return "&".join(self.sources)

    @property
    def slug(self) -> str:
        return "_".join(s.lower() for s in self.sources)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(itertools.chain.from_iterable(FEATURES[s] for s in self.sources))

    def __str__(self) -> str:
        return self.name


ALL_COMBOS: tuple[DatasetCombo, ...] = tuple(
    DatasetCombo(c) for r in (1, 2, 3) for c in itertools.combinations(SOURCES, r)
)
FULL = DatasetCombo(SOURCES)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Rows are participants, columns are registry-ordered features.

    ``X`` may contain NaN (a feature that could not be computed); models and
    selectors receive imputed matrices.
    """

    ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2 or X.shape != (len(self.ids), len(self.names)) or y.shape != (len(self.ids),):
            raise DataError(
                f"feature matrix shape mismatch: X {X.shape}, {len(self.ids)} ids, {len(self.names)} names"
            )
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return len(self.ids)

    def columns(self, names: Iterable[str]) -> "FeatureMatrix":
        names = tuple(names)
        pos = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise ConfigError(f"features not in matrix: {missing}")
        return FeatureMatrix(self.ids, self.X[:, [pos[n] for n in names]], self.y, names)

    def for_combo(self, combo: DatasetCombo) -> "FeatureMatrix":
        return self.columns(combo.features)

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return FeatureMatrix(tuple(np.asarray(self.ids, dtype=object)[idx]), self.X[idx], self.y[idx], self.names)

    def class_counts(self) -> tuple[int, int]:
        return int((self.y == 1).sum()), int((self.y == 0).sum())

    def equals(self, other: "FeatureMatrix") -> bool:
        return (
            self.ids == other.ids
            and self.names == other.names
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.X, other.X, equal_nan=True)
        )


# ------------------------------------------------------------------ extraction


def extract_features(record: ParticipantRecord) -> dict[str, float]:
    """All registry features for one participant, keyed by registry name."""
    aoi = extract_aoi_features(record.gaze)
    em = extract_em_features(record.gaze).as_dict()
    qar = extract_qar_features(record.flight)
    out = {f"aoi.{k}": v for k, v in aoi.as_dict().items()}
    out.update({f"em.{k}": em[k] for k in EM_NAMES})
    out.update({f"qar.{k}": v for k, v in qar.as_dict().items()})
    if qar.flags:
        log.info("%s: flight flags %s", record.participant_id, ",".join(qar.flags))
    return {n: out[n] for n in ALL_FEATURES}


def _extract_entry(entry: CohortEntry) -> tuple[str, list[float] | None, str | None]:
    try:
        feats = extract_features(entry.load())
    except DataError as exc:
        return entry.participant_id, None, str(exc)
    return entry.participant_id, [feats[n] for n in ALL_FEATURES], None


def extract_cohort(cohort: Cohort, jobs: int = 1) -> FeatureMatrix:
    """Feature matrix for every participant, all-or-nothing.

    Every participant is attempted; if any fails, a ``DataError`` listing
    each failing participant is raised and no matrix is returned.
    """
    entries = list(cohort)
    if jobs <= 1:
        results = [_extract_entry(e) for e in entries]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_entry, entries))
    failed = [(pid, msg) for pid, _, msg in results if msg is not None]
    if failed:
        detail = "; ".join(f"{pid}: {msg}" for pid, msg in failed)
        raise DataError(f"feature extraction failed for {len(failed)} participant(s): {detail}")
    return FeatureMatrix(
        tuple(e.participant_id for e in entries),
        np.array([vals for _, vals, _ in results], dtype=float).reshape(len(entries), len(ALL_FEATURES)),
        cohort.labels,
        ALL_FEATURES,
    )


# ------------------------------------------------------------------ CSV


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.9g}"


def features_to_csv(fm: FeatureMatrix) -> str:
    """participant_id,label,<features...>; 9 significant digits, NaN as empty."""
    lines = [",".join(("participant_id", "label") + fm.names)]
    for pid, label, row in zip(fm.ids, fm.y, fm.X):
        lines.append(",".join([pid, str(int(label))] + [_fmt(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def write_features(fm: FeatureMatrix, dest: str | Path) -> None:
    Path(dest).write_text(features_to_csv(fm))


def read_features(source: str | Path | io.TextIOBase) -> FeatureMatrix:
    name = str(source) if isinstance(source, (str, Path)) else "<stream>"
    df = pd.read_csv(source, dtype=str, keep_default_na=False)
    for col in ("participant_id", "label"):
        if col not in df.columns:
            raise SchemaError(col, name)
    names = tuple(c for c in df.columns if c not in ("participant_id", "label"))
    unknown = [n for n in names if n not in _INDEX]
    if unknown:
        raise DataError(f"{name}: unknown feature column(s) {unknown}")
    X = np.empty((len(df), len(names)))
    for j, col in enumerate(names):
        for i, cell in enumerate(df[col]):
            cell = cell.strip()
            if cell == "":
                X[i, j] = math.nan
                continue
            try:
                X[i, j] = float(cell)
            except ValueError:
                raise RowError(i, col, f"not a number: {cell!r}", name) from None
    y = []
    for i, cell in enumerate(df["label"]):
        if cell.strip() not in ("0", "1"):
            raise RowError(i, "label", f"label must be 0 or 1, got {cell!r}", name)
        y.append(int(cell))
    ids = tuple(df["participant_id"].str.strip())
    if len(set(ids)) != len(ids):
        raise DataError(f"{name}: duplicate participant_id")
    return FeatureMatrix(ids, X, np.array(y, dtype=int), names)


def combo_columns(combos: Sequence[DatasetCombo] = ALL_COMBOS) -> str:
    """CSV of (combo, feature) pairs listing each combination's columns."""
    lines = ["combo,feature"]
    for c in combos:
        lines += [f"{c.name},{f}" for f in c.features]
    return "\n".join(lines) + "\n"
