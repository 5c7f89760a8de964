"""QAR-style flight-dynamics features and the four flight performance indicators.

Positions are converted to a local east/north/up frame with an
equirectangular projection about the first reference point of the stream
(the runway end), which is accurate to well under a metre at circuit scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DataError, LandingError
from .telemetry import FlightStream

EARTH_RADIUS_M = 6_371_008.8
METRES_PER_DEG_LAT = math.pi * EARTH_RADIUS_M / 180.0

AGL_CONTACT_M = 0.5
CONTACT_DWELL_S = 2.0
AIRBORNE_AGL_M = 5.0
STOP_GS = 1.0
SMOOTH_WINDOW = 5
DESCENT_WINDOW_S = 30.0


@dataclass(frozen=True)
class LandingEvent:
    touchdown_time: float
    full_stop_time: float
    touchdown_index: int
    stop_index: int
    stop_flagged: bool = False  # no stop before the end of the stream


@dataclass(frozen=True)
class QarFeatures:
    ldg_time: float
    vert_accel_landing: float
    aoa_1s: float
    aoa_8s: float
    aoa_min: float
    aoa_max: float
    pitch_1s: float
    pitch_8s: float
    rudder_1s: float
    rudder_8s: float
    elevator_1s: float
    elevator_8s: float
    rollinput_1s: float
    rollinput_8s: float
    tas_1s: float
    tas_8s: float
    gs_1s: float
    gs_8s: float
    velocity_descent_mean: float
    longitude_err_mean: float
    longitude_err_sd: float
    latitude_err_mean: float
    latitude_err_sd: float
    height_err_mean: float
    height_err_sd: float
    dist_err_mean: float
    dist_err_sd: float
    rou_min: float
    rou_max: float
    acc_h_max: float
    acc_xy_max: float
    roll_min: float
    roll_max: float
    pitch_min: float
    pitch_max: float
    slide_length: float
    total_flight_time: float
    flags: tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls) if f.name != "flags")

    def as_dict(self) -> dict[str, float]:
        return {n: float(getattr(self, n)) for n in self.names()}


# ------------------------------------------------------------------ geometry


def local_frame(stream: FlightStream) -> tuple[float, float]:
    """Origin (lon, lat) of the local frame: the stream's first reference point."""
    return float(stream.nearest_ref[0, 0]), float(stream.nearest_ref[0, 1])


def to_enu(lon, lat, origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    lon0, lat0 = origin
    m_lon = METRES_PER_DEG_LAT * math.cos(math.radians(lat0))
    return (np.asarray(lon) - lon0) * m_lon, (np.asarray(lat) - lat0) * METRES_PER_DEG_LAT


def from_enu(east, north, origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    lon0, lat0 = origin
    m_lon = METRES_PER_DEG_LAT * math.cos(math.radians(lat0))
    return lon0 + np.asarray(east) / m_lon, lat0 + np.asarray(north) / METRES_PER_DEG_LAT


def position_errors(stream: FlightStream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signed east, north and height offsets (m) from the nearest reference point."""
    origin = local_frame(stream)
    e, n = to_enu(stream.longitude, stream.latitude, origin)
    re_, rn = to_enu(stream.nearest_ref[:, 0], stream.nearest_ref[:, 1], origin)
    return e - re_, n - rn, stream.asl - stream.nearest_ref[:, 2]


def moving_average(x: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centred moving average; the window is truncated at the ends."""
    x = np.asarray(x, dtype=float)
    if len(x) < 2 or window <= 1:
        return x.copy()
    k = np.ones(window)
    num = np.convolve(x, k, mode="same")
    den = np.convolve(np.ones_like(x), k, mode="same")
    return num / den


def curvature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unsigned planar curvature from 5-point central differences.

    Differences are taken with respect to sample index; curvature does not
    depend on the parametrisation. The two samples at each end, and points
    where the path is stationary, are NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.full(len(x), np.nan)
    if len(x) < 5:
        return out

    def d1(f):
        return (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / 12.0

    def d2(f):
        return (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / 12.0

    xp, yp, xpp, ypp = d1(x), d1(y), d2(x), d2(y)
    speed2 = xp * xp + yp * yp
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.abs(xp * ypp - yp * xpp) / speed2**1.5
    k[speed2 < 1e-12] = np.nan
    out[2:-2] = k
    return out


# ---------------------------------------------------------------- landing


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of True runs."""
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1))


def detect_landing(
    stream: FlightStream,
    agl_threshold: float = AGL_CONTACT_M,
    dwell_s: float = CONTACT_DWELL_S,
) -> LandingEvent:
    """First sustained ground contact after the aircraft has been airborne.

    Touchdown is the first sample, after AGL has exceeded 5 m, from which AGL
    stays at or below ``agl_threshold`` for at least ``dwell_s``. Full stop is
    the first sample from touchdown on with ground speed under 1 m/s; when
    there is none the last sample is used and the event is flagged.
    """
    t, agl = stream.timestamp, stream.agl
    air = np.flatnonzero(agl > AIRBORNE_AGL_M)
    if air.size == 0:
        raise LandingError("never airborne: AGL never exceeds 5 m")
    first_air = int(air[0])
    low = agl <= agl_threshold
    low[:first_air] = False
    td = None
    for a, b in _runs(low):
        if t[b] - t[a] >= dwell_s:
            td = int(a)
            break
    if td is None:
        raise LandingError(f"no landing: AGL never stays <= {agl_threshold} m for {dwell_s} s after take-off")
    stopped = np.flatnonzero(stream.gs[td:] < STOP_GS)
    if stopped.size:
        stop, flagged = td + int(stopped[0]), False
    else:
        stop, flagged = len(t) - 1, True
    return LandingEvent(float(t[td]), float(t[stop]), td, stop, flagged)


def detect_takeoff(
    stream: FlightStream,
    agl_threshold: float = AGL_CONTACT_M,
    dwell_s: float = CONTACT_DWELL_S,
) -> int:
    """Index of the first sample from which AGL stays above the threshold for ``dwell_s``."""
    t = stream.timestamp
    for a, b in _runs(stream.agl > agl_threshold):
        if t[b] - t[a] >= dwell_s:
            return int(a)
    raise LandingError(f"never airborne: AGL never stays above {agl_threshold} m for {dwell_s} s")


def sample_at(stream: FlightStream, t: float, field_name: str) -> float:
    """Linearly interpolated value of a stream column at time ``t``."""
    ts = stream.timestamp
    if not ts[0] <= t <= ts[-1]:
        raise DataError(f"sample_at: t={t} outside stream span [{ts[0]}, {ts[-1]}]")
    return float(np.interp(t, ts, getattr(stream, field_name)))


# ---------------------------------------------------------------- features


def extract_qar_features(stream: FlightStream) -> QarFeatures:
    t = stream.timestamp
    ev = detect_landing(stream)
    to = detect_takeoff(stream)
    td = ev.touchdown_index
    if to >= td:
        raise LandingError("take-off detected at or after touchdown")
    flags: list[str] = []
    if ev.stop_flagged:
        flags.append("no_full_stop")

    before: dict[str, float] = {}
    cols = (("aoa", "aoa"), ("pitch", "pitch"), ("rudder", "rudder_input"),
            ("elevator", "elevator_input"), ("rollinput", "roll_input"), ("tas", "tas"), ("gs", "gs"))
    for offset in (1, 8):
        tq = ev.touchdown_time - offset
        missing = tq < t[0]
        if missing:
            flags.append(f"missing_{offset}s")
        for short, col in cols:
            before[f"{short}_{offset}s"] = math.nan if missing else sample_at(stream, tq, col)

    air = slice(to, td + 1)

    e_err, n_err, h_err = position_errors(stream)
    dist = np.sqrt(e_err**2 + n_err**2 + h_err**2)

    origin = local_frame(stream)
    east, north = to_enu(stream.longitude, stream.latitude, origin)
    es, ns = moving_average(east), moving_average(north)
    rou = curvature(es, ns)[air]
    rou = rou[np.isfinite(rou)]
    if rou.size == 0:
        flags.append("no_curvature")

    vs_s = moving_average(stream.vertical_speed)
    acc_h = np.gradient(vs_s, t)
    ve, vn = np.gradient(es, t), np.gradient(ns, t)
    acc_xy = np.hypot(np.gradient(ve, t), np.gradient(vn, t))

    near_td = np.abs(t - ev.touchdown_time) <= 0.5
    descent = (t >= ev.touchdown_time - DESCENT_WINDOW_S) & (np.arange(len(t)) <= td)
    descent[: to] = False

    slide = 0.0
    if ev.stop_index > td:
        seg = slice(td, ev.stop_index + 1)
        slide = float(np.hypot(np.diff(east[seg]), np.diff(north[seg])).sum())

    return QarFeatures(
        ldg_time=ev.touchdown_time,
        vert_accel_landing=float(np.max(np.abs(acc_h[near_td]))),
        aoa_1s=before["aoa_1s"],
        aoa_8s=before["aoa_8s"],
        aoa_min=float(stream.aoa[air].min()),
        aoa_max=float(stream.aoa[air].max()),
        pitch_1s=before["pitch_1s"],
        pitch_8s=before["pitch_8s"],
        rudder_1s=before["rudder_1s"],
        rudder_8s=before["rudder_8s"],
        elevator_1s=before["elevator_1s"],
        elevator_8s=before["elevator_8s"],
        rollinput_1s=before["rollinput_1s"],
        rollinput_8s=before["rollinput_8s"],
        tas_1s=before["tas_1s"],
        tas_8s=before["tas_8s"],
        gs_1s=before["gs_1s"],
        gs_8s=before["gs_8s"],
        velocity_descent_mean=float(-np.mean(stream.vertical_speed[descent])),
        longitude_err_mean=float(e_err.mean()),
        longitude_err_sd=float(e_err.std()),
        latitude_err_mean=float(n_err.mean()),
        latitude_err_sd=float(n_err.std()),
        height_err_mean=float(h_err.mean()),
        height_err_sd=float(h_err.std()),
        dist_err_mean=float(dist.mean()),
        dist_err_sd=float(dist.std()),
        rou_min=float(rou.min()) if rou.size else math.nan,
        rou_max=float(rou.max()) if rou.size else math.nan,
        acc_h_max=float(np.max(np.abs(acc_h[air]))),
        acc_xy_max=float(np.max(acc_xy[air])),
        roll_min=float(stream.roll[air].min()),
        roll_max=float(stream.roll[air].max()),
        pitch_min=float(stream.pitch[air].min()),
        pitch_max=float(stream.pitch[air].max()),
        slide_length=slide,
        total_flight_time=float(t[td] - t[to]),
        flags=tuple(flags),
    )


def performance_indicators(stream: FlightStream) -> dict[str, float]:
    """Total flight time (s), pitch 1 s before landing (deg), mean and SD of
    distance to the reference line (m)."""
    q = extract_qar_features(stream)
    return {
        "total_flight_time": q.total_flight_time,
        "pitch_1s": q.pitch_1s,
        "dist_err_mean": q.dist_err_mean,
        "dist_err_sd": q.dist_err_sd,
    }
