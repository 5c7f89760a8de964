"""Eye-movement (EM) and AOI dwell features from a gaze stream.

The left eye is canonical: fixation detection, dispersion and eye opening all
use the FVL_* / EOL columns.
"""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import DataError
from .telemetry import AOIS, GazeStream

log = logging.getLogger(__name__)

VELOCITY_THRESHOLD_DEG_S = 30.0
MIN_FIXATION_MS = 60.0


@dataclass(frozen=True)
class Fixation:
    start: float
    end: float
    centroid_dir: tuple[float, float, float]

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class EmFeatures:
    sd_fix_x: float
    sd_fix_y: float
    sd_fix_z: float
    eye_opening_mean: float
    aoi_transition_freq: float  # Hz
    fixation_duration_mean: float  # ms
    fixation_count: int
    saccade_count: int

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(v) for f, v in zip(fields(self), astuple(self))}


@dataclass(frozen=True)
class AoiFeatures:
    percent_dwell: tuple[float, ...]  # one per AOIS entry, fractions
    unknown_share: float

    def as_dict(self) -> dict[str, float]:
        return {a.slug: float(v) for a, v in zip(AOIS, self.percent_dwell)}


def angular_velocity(timestamp: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Degrees per second between consecutive (already unit) direction vectors."""
    dots = np.clip(np.einsum("ij,ij->i", directions[:-1], directions[1:]), -1.0, 1.0)
    return np.degrees(np.arccos(dots)) / np.diff(timestamp)


def detect_fixations(
    stream: GazeStream,
    velocity_threshold: float = VELOCITY_THRESHOLD_DEG_S,
    min_duration_ms: float = MIN_FIXATION_MS,
) -> list[Fixation]:
    """Velocity-threshold (I-VT) fixation identification.

    Consecutive sample pairs whose angular velocity is below
    ``velocity_threshold`` (deg/s) are chained into candidates; a candidate
    spans from its first to its last sample and is kept when it lasts at least
    ``min_duration_ms``. Samples with a zero direction vector (tracking loss)
    are dropped before velocities are computed.
    """
    t = np.asarray(stream.timestamp, dtype=float)
    d = np.asarray(stream.gaze_dir_left, dtype=float)
    norms = np.linalg.norm(d, axis=1)
    ok = norms > 0
    skipped = int((~ok).sum())
    if skipped:
        log.warning("detect_fixations: skipped %d samples with zero-norm gaze direction", skipped)
    t, d = t[ok], d[ok] / norms[ok, None]
    if len(t) < 2:
        return []

    slow = angular_velocity(t, d) < velocity_threshold
    # Runs of consecutive slow intervals; interval k joins samples k and k+1.
    edges = np.diff(np.concatenate(([0], slow.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)  # exclusive interval index == last sample index
    min_s = min_duration_ms / 1000.0
    out = []
    for a, b in zip(starts, stops):
        if t[b] - t[a] < min_s:
            continue
        c = d[a : b + 1].mean(axis=0)
        c = c / np.linalg.norm(c)
        out.append(Fixation(float(t[a]), float(t[b]), (float(c[0]), float(c[1]), float(c[2]))))
    return out


def aoi_transition_count(codes: np.ndarray) -> int:
    return int(np.count_nonzero(codes[1:] != codes[:-1]))


def extract_em_features(
    stream: GazeStream,
    velocity_threshold: float = VELOCITY_THRESHOLD_DEG_S,
    min_duration_ms: float = MIN_FIXATION_MS,
) -> EmFeatures:
    if len(stream) == 0:
        raise DataError("extract_em_features: empty gaze stream")
    duration = stream.duration
    if duration <= 0:
        raise DataError("extract_em_features: gaze stream has zero duration")
    fx = detect_fixations(stream, velocity_threshold, min_duration_ms)
    sd = stream.gaze_dir_left.std(axis=0)  # population SD, as numpy.std
    return EmFeatures(
        sd_fix_x=float(sd[0]),
        sd_fix_y=float(sd[1]),
        sd_fix_z=float(sd[2]),
        eye_opening_mean=float(np.mean(stream.eye_open_left)),
        aoi_transition_freq=aoi_transition_count(stream.aoi) / duration,
        fixation_duration_mean=float(np.mean([f.duration for f in fx]) * 1000.0) if fx else 0.0,
        fixation_count=len(fx),
        saccade_count=max(0, len(fx) - 1),
    )


def sample_dwell_times(timestamp: np.ndarray) -> np.ndarray:
    """Forward gap per sample; the last sample gets the median gap."""
    gaps = np.diff(timestamp)
    if gaps.size == 0:
        raise DataError("dwell times need at least two samples")
    return np.append(gaps, np.median(gaps))


def extract_aoi_features(stream: GazeStream) -> AoiFeatures:
    """Fraction of total gaze time spent on each AOI (Unknown in the denominator)."""
    if len(stream) < 2:
        raise DataError("extract_aoi_features: total gaze time is zero")
    dwell = sample_dwell_times(stream.timestamp)
    total = dwell.sum()
    if total <= 0:
        raise DataError("extract_aoi_features: total gaze time is zero")
    per = np.bincount(stream.aoi.astype(np.int64) + 1, weights=dwell, minlength=len(AOIS) + 1)
    frac = per / total
    return AoiFeatures(tuple(float(v) for v in frac[1:]), float(frac[0]))
