"""Synthetic expert/novice cohorts: raw gaze and flight logs with known ground truth.

Each participant flies one left-hand traffic circuit (take-off roll, climb-out
on the upwind leg, crosswind, downwind, base, final, touchdown, roll-out to a
stop). Flight dynamics are kinematic: the aircraft follows a reference
centre-line, displaced by a designed offset whose per-sample distance has the
participant's target mean and SD exactly. Gaze is a budgeted semi-Markov walk
over the AOIs, each visit made of fixations around an AOI anchor direction
with small angular jitter.

Per-participant parameters are drawn from class profiles calibrated to
published expert/novice group means and SDs. Positive quantities use gamma
distributions with matched mean and SD (no negative dwell times or
distances); signed ones are Gaussian. A cohort samples each calibrated
parameter by Latin hypercube within class so group means track their targets
closely even at n = 23.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter
from scipy.optimize import brentq
from scipy.special import gammaincinv, ndtri

from ._seeding import derive_seed
from .flight_features import from_enu
from .telemetry import (
    AOIS,
    Aoi,
    FlightStream,
    GazeStream,
    ParticipantRecord,
    write_flight_log,
    write_gaze_log,
    write_manifest,
)

N_STATES = len(AOIS) + 1  # 19 AOIs + off-AOI ("unknown") gaze
UNKNOWN_STATE = len(AOIS)

ORIGIN_LON_LAT = (121.805, 31.1434)
FIELD_ELEVATION_M = 4.0
G = 9.80665

# Latent variables sampled per participant (order matters: quantile vector layout).
LATENTS = (
    "flight_time",
    "pitch_1s",
    "dist_mean",
    "dist_ratio",
    "dwell_airspeed",
    "dwell_attitude",
    "dwell_vsi",
    "dwell_altitude",
)
KEY_AOIS = (
    Aoi.AIRSPEED_INDICATOR,
    Aoi.ATTITUDE_INDICATOR,
    Aoi.VERTICAL_SPEED_INDICATOR,
    Aoi.ALTITUDE_INDICATOR,
)


@dataclass(frozen=True)
class Dist:
    """Mean/SD pair. ``positive`` selects a moment-matched gamma, else a normal."""

    mean: float
    sd: float
    positive: bool = True

    def ppf(self, u: float) -> float:
        if self.sd <= 0:
            return self.mean
        if not self.positive:
            return self.mean + self.sd * float(ndtri(u))
        shape = (self.mean / self.sd) ** 2
        scale = self.sd**2 / self.mean
        return float(gammaincinv(shape, u)) * scale

    def draw(self, rng: np.random.Generator) -> float:
        return self.ppf(float(rng.uniform(1e-12, 1 - 1e-12)))


# Group targets used for calibration: (mean, SD) per class.
CALIBRATION_TARGETS: dict[str, dict[int, tuple[float, float]]] = {
    "total_flight_time": {0: (902.32, 336.73), 1: (759.06, 163.58)},
    "pitch_1s": {0: (-12.54, 29.03), 1: (3.97, 24.43)},
    "dist_err_mean": {0: (873.89, 818.43), 1: (176.67, 205.52)},
    "dist_err_sd": {0: (675.78, 589.07), 1: (211.52, 225.76)},
    "aoi.airspeed_indicator": {0: (0.0532, 0.0498), 1: (0.0856, 0.0545)},
    "aoi.attitude_indicator": {0: (0.3103, 0.122), 1: (0.2515, 0.0923)},
    "aoi.vertical_speed_indicator": {0: (0.0533, 0.0411), 1: (0.1311, 0.0884)},
    "aoi.altitude_indicator": {0: (0.0134, 0.0222), 1: (0.0283, 0.0229)},
}


@dataclass(frozen=True, eq=False)
class ClassProfile:
    label: int
    # flight performance (calibrated)
    flight_time: Dist
    pitch_1s: Dist
    dist_mean: Dist
    dist_sd_ratio: float  # E[dist SD] / E[dist mean]
    dist_ratio_spread: float  # log-SD of the per-participant ratio
    # key-instrument dwell fractions (calibrated), in KEY_AOIS order
    key_dwell: tuple[Dist, Dist, Dist, Dist]
    # share of the remaining gaze time for every state (key AOIs ignored)
    background_weights: np.ndarray
    background_concentration: float
    mean_dwell_s: np.ndarray  # mean visit duration per state
    # flight technique (uncalibrated class differences)
    approach_speed: Dist
    cruise_speed: Dist
    sink_rate: Dist
    rollout_decel: Dist
    aoa_base: Dist
    descent_time: Dist  # s, length of the final descent
    bank_noise_deg: float
    control_noise: float  # SD of rudder/elevator/roll-input noise
    circuit_height: Dist = Dist(300.0, 20.0)
    vertical_offset_max_rad: float = 0.25
    # log-SD of per-participant multipliers on bank/control noise, visit
    # durations and fixation durations
    technique_spread: float = 0.2
    # gaze technique
    fixation_ms: float = 300.0
    fixation_jitter_deg: float = 0.03
    eye_open: Dist = Dist(0.75, 0.05)

    @property
    def lateral_noise(self) -> float:
        """Mean distance to the reference line (m)."""
        return self.dist_mean.mean

    def target_shares(self) -> np.ndarray:
        """Expected fraction of gaze time per state."""
        share = np.zeros(N_STATES)
        key = [d.mean for d in self.key_dwell]
        for a, m in zip(KEY_AOIS, key):
            share[a.code] = m
        bg = self.background_weights.copy()
        for a in KEY_AOIS:
            bg[a.code] = 0.0
        share += (1.0 - sum(key)) * bg / bg.sum()
        return share

    @property
    def transition(self) -> np.ndarray:
        return transition_matrix(self.target_shares(), self.mean_dwell_s)

    def stationary_dwell(self) -> np.ndarray:
        """Long-run fraction of gaze time per state under the semi-Markov chain."""
        P = self.transition
        w, v = np.linalg.eig(P.T)
        pi = np.real(v[:, np.argmin(np.abs(w - 1))])
        pi = pi / pi.sum()
        t = pi * self.mean_dwell_s
        return t / t.sum()

    def noiseless(self) -> "ClassProfile":
        """Same profile with every spread and the path offset set to zero."""

        def z(d: Dist) -> Dist:
            return Dist(d.mean, 0.0, d.positive)

        return replace(
            self,
            flight_time=z(self.flight_time),
            pitch_1s=z(self.pitch_1s),
            dist_mean=Dist(0.0, 0.0),
            dist_ratio_spread=0.0,
            key_dwell=tuple(z(d) for d in self.key_dwell),
            background_concentration=math.inf,
            approach_speed=z(self.approach_speed),
            cruise_speed=z(self.cruise_speed),
            sink_rate=z(self.sink_rate),
            rollout_decel=z(self.rollout_decel),
            aoa_base=z(self.aoa_base),
            descent_time=z(self.descent_time),
            circuit_height=z(self.circuit_height),
            bank_noise_deg=0.0,
            control_noise=0.0,
            fixation_jitter_deg=0.0,
            technique_spread=0.0,
            eye_open=z(self.eye_open),
        )


def transition_matrix(shares: np.ndarray, mean_dwell: np.ndarray) -> np.ndarray:
    """Jump-chain matrix (no self-transitions) whose semi-Markov time shares are ``shares``.

    Uses P[a, b] = w_b / (1 - w_a), which is reversible with stationary
    distribution proportional to w_a (1 - w_a); w is solved so that this
    matches the visit frequencies shares / mean_dwell.
    """
    visits = shares / mean_dwell
    pi = visits / visits.sum()
    pos = pi > 0
    top = int(np.argmax(pi))
    if pi[top] >= 0.5:
        raise ValueError("a state with half the visits cannot avoid self-transitions")

    def weights(c: float, big_top: bool) -> np.ndarray:
        w = np.zeros_like(pi)
        root = np.sqrt(np.maximum(0.0, 1.0 - 4.0 * c * pi[pos]))
        w[pos] = 0.5 * (1.0 - root)
        if big_top:
            w[top] = 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * c * pi[top])))
        return w

    # Small roots everywhere when they can reach a unit sum, otherwise the
    # dominant state takes the large root (sum > 1 as c -> 0 since pi_top < 1/2).
    hi = 1.0 / (4.0 * pi[top])
    big = weights(hi, False).sum() < 1.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        under = weights(mid, big).sum() < 1.0
        if under != big:
            lo = mid
        else:
            hi = mid
    w = weights(0.5 * (lo + hi), big)
    w = w / w.sum()
    P = np.where(pos[None, :], w[None, :], 0.0) / (1.0 - w[:, None])
    np.fill_diagonal(P, 0.0)
    return P / P.sum(axis=1, keepdims=True)


def _background(front: float, side: float, unknown: float, turn_slip: float, others: float) -> np.ndarray:
    w = np.full(N_STATES, 0.0)
    instruments = [a for a in AOIS if "glass" not in a.slug and a not in KEY_AOIS]
    for a in instruments:
        w[a.code] = others / len(instruments)
    w[Aoi.TURN_AND_SLIP_INDICATOR.code] += turn_slip
    w[Aoi.FRONT_COCKPIT_GLASS.code] = front
    w[Aoi.LEFT_COCKPIT_GLASS.code] = side
    w[Aoi.RIGHT_COCKPIT_GLASS.code] = side
    w[UNKNOWN_STATE] = unknown
    return w / w.sum()


def _dwell_means(instrument: float, glass: float, unknown: float) -> np.ndarray:
    d = np.full(N_STATES, instrument)
    for a in AOIS:
        if "glass" in a.slug:
            d[a.code] = glass
    d[UNKNOWN_STATE] = unknown
    return d


def default_profiles() -> tuple[ClassProfile, ClassProfile]:
    """(expert, novice) profiles."""

    def dwell(label: int) -> tuple[Dist, Dist, Dist, Dist]:
        keys = ("aoi.airspeed_indicator", "aoi.attitude_indicator",
                "aoi.vertical_speed_indicator", "aoi.altitude_indicator")
        return tuple(Dist(*CALIBRATION_TARGETS[k][label]) for k in keys)  # type: ignore[return-value]

    def ratio(label: int) -> float:
        return CALIBRATION_TARGETS["dist_err_sd"][label][0] / CALIBRATION_TARGETS["dist_err_mean"][label][0]

    # shared by both classes: AOI class signal lives only in the four key instruments
    background = _background(front=0.40, side=0.07, unknown=0.08, turn_slip=0.08, others=0.30)

    expert = ClassProfile(
        label=1,
        flight_time=Dist(*CALIBRATION_TARGETS["total_flight_time"][1]),
        pitch_1s=Dist(*CALIBRATION_TARGETS["pitch_1s"][1], positive=False),
        dist_mean=Dist(*CALIBRATION_TARGETS["dist_err_mean"][1]),
        dist_sd_ratio=ratio(1),
        dist_ratio_spread=0.2,
        key_dwell=dwell(1),
        background_weights=background,
        background_concentration=40.0,
        mean_dwell_s=_dwell_means(instrument=0.8, glass=1.8, unknown=0.6),
        approach_speed=Dist(33.0, 1.5),
        cruise_speed=Dist(50.0, 3.0),
        sink_rate=Dist(0.7, 0.25),
        rollout_decel=Dist(2.2, 0.3),
        aoa_base=Dist(4.0, 0.6),
        descent_time=Dist(130.0, 15.0),
        bank_noise_deg=2.0,
        control_noise=0.05,
        fixation_ms=330.0,
        fixation_jitter_deg=0.03,
        eye_open=Dist(0.78, 0.05),
    )
    novice = ClassProfile(
        label=0,
        flight_time=Dist(*CALIBRATION_TARGETS["total_flight_time"][0]),
        pitch_1s=Dist(*CALIBRATION_TARGETS["pitch_1s"][0], positive=False),
        dist_mean=Dist(*CALIBRATION_TARGETS["dist_err_mean"][0]),
        dist_sd_ratio=ratio(0),
        dist_ratio_spread=0.2,
        key_dwell=dwell(0),
        background_weights=background,
        background_concentration=40.0,
        mean_dwell_s=_dwell_means(instrument=1.2, glass=2.6, unknown=0.8),
        approach_speed=Dist(36.0, 3.5),
        cruise_speed=Dist(46.0, 5.0),
        sink_rate=Dist(1.5, 0.6),
        rollout_decel=Dist(1.7, 0.4),
        aoa_base=Dist(5.0, 1.3),
        descent_time=Dist(115.0, 30.0),
        bank_noise_deg=4.5,
        control_noise=0.11,
        fixation_ms=270.0,
        fixation_jitter_deg=0.045,
        eye_open=Dist(0.73, 0.07),
    )
    return expert, novice


# ------------------------------------------------------------------ circuit


@dataclass(frozen=True)
class Circuit:
    """Reference centre-line tabulated by arc length (local ENU metres)."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray  # radians, math convention (0 = east, CCW positive)
    curvature: np.ndarray  # signed, 1/m
    touchdown_s: float

    def at(self, s):
        x = np.interp(s, self.s, self.x)
        y = np.interp(s, self.s, self.y)
        h = np.interp(s, self.s, np.unwrap(self.heading))
        k = np.interp(s, self.s, self.curvature)
        return x, y, h, k


UPWIND_END_X = 3000.0
TURN_RADIUS = 400.0
TOUCHDOWN_X = 300.0
MIN_WIDTH = 1500.0
MIN_BASE_X = -1500.0


def build_circuit(base_x: float, width: float, step: float = 1.0) -> Circuit:
    """Left-hand rectangular circuit with rounded corners.

    Runway along +x from the origin; the path continues past the touchdown
    point along the runway for the roll-out.
    """
    R = TURN_RADIUS
    pieces = []  # (kind, params)
    corners = [
        ((UPWIND_END_X, 0.0), 0.0),
        ((UPWIND_END_X, width), math.pi / 2),
        ((base_x, width), math.pi),
        ((base_x, 0.0), 3 * math.pi / 2),
    ]
    pos = np.array([0.0, 0.0])
    heading = 0.0
    for (cx, cy), h in corners:
        d = np.array([math.cos(h), math.sin(h)])
        corner = np.array([cx, cy])
        straight_end = corner - d * R
        pieces.append(("line", pos.copy(), straight_end.copy(), h))
        centre = straight_end + R * np.array([-d[1], d[0]])
        pieces.append(("arc", centre, h, R))
        heading = h + math.pi / 2
        pos = corner + R * np.array([math.cos(heading), math.sin(heading)])
    end = np.array([TOUCHDOWN_X + 3000.0, 0.0])
    pieces.append(("line", pos.copy(), end, heading))

    xs, ys, hs, ks = [], [], [], []
    for p in pieces:
        if p[0] == "line":
            _, a, b, h = p
            n = max(2, int(np.ceil(np.linalg.norm(b - a) / step)) + 1)
            f = np.linspace(0.0, 1.0, n)[:-1]
            xs.append(a[0] + f * (b[0] - a[0]))
            ys.append(a[1] + f * (b[1] - a[1]))
            hs.append(np.full(len(f), h))
            ks.append(np.zeros(len(f)))
        else:
            _, c, h0, r = p
            n = max(2, int(np.ceil(r * math.pi / 2 / step)) + 1)
            th = np.linspace(0.0, math.pi / 2, n)[:-1]
            ang = h0 - math.pi / 2 + th
            xs.append(c[0] + r * np.cos(ang))
            ys.append(c[1] + r * np.sin(ang))
            hs.append(h0 + th)
            ks.append(np.full(len(th), 1.0 / r))
    xs.append(np.array([end[0]]))
    ys.append(np.array([end[1]]))
    hs.append(np.array([heading]))
    ks.append(np.array([0.0]))
    x, y = np.concatenate(xs), np.concatenate(ys)
    s = np.concatenate(([0.0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))))
    # touchdown point: on the final leg (last straight), x == TOUCHDOWN_X
    final_start = len(x) - len(xs[-2]) - 1
    idx = final_start + int(np.searchsorted(x[final_start:], TOUCHDOWN_X))
    td_s = s[idx - 1] + (TOUCHDOWN_X - x[idx - 1]) / (x[idx] - x[idx - 1]) * (s[idx] - s[idx - 1])
    return Circuit(s, x, y, np.concatenate(hs), np.concatenate(ks), float(td_s))


# ------------------------------------------------------------------ helpers


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _ar1(rng: np.random.Generator, n: int, sd: float, corr_samples: float) -> np.ndarray:
    """Stationary AR(1) noise with marginal SD ``sd``."""
    if sd <= 0 or n == 0:
        return np.zeros(n)
    rho = math.exp(-1.0 / max(corr_samples, 1e-9))
    e = rng.standard_normal(n) * sd * math.sqrt(1.0 - rho * rho)
    e[0] = rng.standard_normal() * sd
    return lfilter([1.0], [1.0, -rho], e)


def _speed_profile(T: float, v_lo: float, v_climb: float, v_cruise: float, v_app: float) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear airborne speed knots (tau, v) over [0, T]."""
    knots = [
        (0.0, v_lo),
        (10.0, v_climb),
        (90.0, v_climb),
        (110.0, v_cruise),
        (T - 170.0, v_cruise),
        (T - 150.0, v_app),
        (T, v_app),
    ]
    tau, v = zip(*knots)
    return np.array(tau), np.array(v)


def _integral(tau: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(tau)))


@dataclass
class Truth:
    """Scripted quantities a generated participant was built from."""

    takeoff_time: float
    touchdown_time: float
    full_stop_time: float
    total_flight_time: float
    pitch_1s: float
    dist_err_mean: float
    dist_err_sd: float
    dwell_targets: dict[str, float] = field(default_factory=dict)


@dataclass
class SimulatedParticipant:
    record: ParticipantRecord
    truth: Truth


def _quantiles(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(1e-9, 1 - 1e-9, size=len(LATENTS))


def simulate_participant(
    profile: ClassProfile,
    seed: int,
    participant_id: str = "P",
    gaze_hz: float = 120.0,
    flight_hz: float = 30.0,
    quantiles: np.ndarray | None = None,
) -> SimulatedParticipant:
    rng = np.random.default_rng(derive_seed(seed, "participant"))
    q = _quantiles(rng) if quantiles is None else np.asarray(quantiles, dtype=float)
    u = dict(zip(LATENTS, q))

    T = max(300.0, profile.flight_time.ppf(u["flight_time"]))
    pitch_td = float(np.clip(profile.pitch_1s.ppf(u["pitch_1s"]), -60.0, 60.0))
    m = profile.dist_mean.ppf(u["dist_mean"])
    sp = profile.dist_ratio_spread
    ratio = profile.dist_sd_ratio * (
        math.exp(sp * float(ndtri(u["dist_ratio"])) - 0.5 * sp * sp) if sp > 0 else 1.0
    )
    s_target = m * ratio
    key_dwell = [d.ppf(u[f"dwell_{k}"]) for d, k in zip(profile.key_dwell, ("airspeed", "attitude", "vsi", "altitude"))]

    frng = np.random.default_rng(derive_seed(seed, "flight"))
    flight, ftruth = _simulate_flight(profile, frng, T, pitch_td, m, s_target, flight_hz)
    grng = np.random.default_rng(derive_seed(seed, "gaze"))
    duration = float(flight.timestamp[-1])
    gaze, shares = _simulate_gaze(profile, grng, duration, key_dwell, gaze_hz)

    truth = Truth(
        takeoff_time=ftruth["takeoff_time"],
        touchdown_time=ftruth["touchdown_time"],
        full_stop_time=ftruth["full_stop_time"],
        total_flight_time=T,
        pitch_1s=pitch_td,
        dist_err_mean=m,
        dist_err_sd=s_target,
        dwell_targets={
            (AOIS[i].slug if i < len(AOIS) else "unknown"): float(v) for i, v in enumerate(shares)
        },
    )
    rec = ParticipantRecord(participant_id, profile.label, gaze, flight)
    return SimulatedParticipant(rec, truth)


def generate_participant(
    profile: ClassProfile,
    label: int,
    seed: int,
    participant_id: str = "P",
    gaze_hz: float = 120.0,
    flight_hz: float = 30.0,
    quantiles: np.ndarray | None = None,
) -> ParticipantRecord:
    """Deterministic (given ``seed``) synthetic participant."""
    if label != profile.label:
        profile = replace(profile, label=label)
    return simulate_participant(profile, seed, participant_id, gaze_hz, flight_hz, quantiles).record


# ------------------------------------------------------------------ flight


MAX_DRIFT_RATE = 20.0  # m/s, lateral rate limit for the designed offset


def _offset_shape(tau: np.ndarray, T: float, m: float, s: float, position: float) -> np.ndarray:
    """Single smooth excursion from the reference line with sample mean ``m``
    and population SD ``s`` over all samples.

    The excursion rises over ``r`` seconds, holds for ``w`` and falls over
    ``r``, inside [20 s, T - 30 s] after lift-off. ``w`` sets the coefficient
    of variation; ``r`` is stretched until the drift rate stays under
    ``MAX_DRIFT_RATE``. ``position`` in [0, 1] places it in the free time.
    Targets outside the shape family's range keep the mean and miss the SD.
    """
    if m <= 0:
        return np.zeros_like(tau)
    avail = T - 50.0
    target = s / m

    def shape(w: float, r: float) -> np.ndarray:
        start = 20.0 + position * max(0.0, avail - 2 * r - w)
        return _smoothstep((tau - start) / r) * (1.0 - _smoothstep((tau - (start + r + w)) / r))

    def cv(w: float, r: float) -> float:
        h = shape(w, r)
        return float(h.std() / h.mean())

    r = 30.0
    for _ in range(50):
        w_max = max(0.0, avail - 2 * r)
        if cv(0.0, r) <= target:
            w = 0.0
        elif cv(w_max, r) >= target:
            w = w_max
        else:
            w = brentq(lambda x: cv(x, r) - target, 0.0, w_max, xtol=1e-6)
        h = shape(w, r)
        peak = m / h.mean()
        r_new = min(max(30.0, 1.5 * peak / MAX_DRIFT_RATE), 0.5 * avail)
        if abs(r_new - r) < 1e-6:
            break
        r = r_new
    return peak * h


def _track_s(turns: list[tuple[float, float]], s0: float, tau: np.ndarray, v: np.ndarray,
             d: np.ndarray) -> np.ndarray:
    """Reference arc length over ``tau`` for an aircraft holding speed ``v``
    on a path offset outward by ``d``.

    On a turn of radius R the offset path has radius R + d, so the reference
    point advances at v R / (R + d). Straight and turn pieces are integrated
    with cumulative trapezoids and joined at the turn boundaries.
    """
    R = TURN_RADIUS
    dt = np.diff(tau)
    rate_turn = v * R / (R + d)
    F = [np.concatenate(([0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * dt))) for r in (v, rate_turn)]
    out = np.empty_like(tau)
    i, s_cur = 0, s0
    while i < len(tau):
        inside = next(((ta, tb) for ta, tb in turns if ta <= s_cur < tb), None)
        if inside:
            f, s_end = F[1], inside[1]
        else:
            f = F[0]
            s_end = min((ta for ta, _ in turns if ta > s_cur), default=math.inf)
        reach = s_cur + f[i:] - f[i]
        k = int(np.searchsorted(reach, s_end))  # >= 1 since reach[0] < s_end
        out[i : i + k] = reach[:k]
        j = i + k
        if j >= len(tau):
            break
        # cross the boundary mid-step, finish the step in the new regime
        frac = (s_end - reach[k - 1]) / (reach[k] - reach[k - 1])
        g = F[0] if inside else F[1]
        s_cur, i = float(s_end + (1.0 - frac) * (g[j] - g[j - 1])), j
    return out


def _circuit_turns(c: Circuit) -> list[tuple[float, float]]:
    k = c.curvature > 0
    edges = np.diff(np.concatenate(([0], k.astype(np.int8), [0])))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    return [(float(c.s[a]), float(c.s[min(b, len(c.s) - 1)])) for a, b in zip(starts, stops)]


def _simulate_flight(profile, rng, T, pitch_td, m, s_target, hz):
    v_lo = 28.0
    roll_accel = 2.5
    t_wait = 5.0
    t_lo = t_wait + v_lo / roll_accel
    s_lo = 0.5 * v_lo**2 / roll_accel

    v_app = max(20.0, profile.approach_speed.draw(rng))
    v_cruise = max(25.0, profile.cruise_speed.draw(rng))
    sink = max(0.1, profile.sink_rate.draw(rng))
    decel = max(0.5, profile.rollout_decel.draw(rng))
    aoa0 = profile.aoa_base.draw(rng)
    spread = profile.technique_spread
    bank_noise = profile.bank_noise_deg * math.exp(spread * rng.standard_normal() - 0.5 * spread**2)
    control_noise = profile.control_noise * math.exp(spread * rng.standard_normal() - 0.5 * spread**2)
    period = rng.uniform(180.0, 320.0)
    position = rng.uniform()
    descent_s = float(np.clip(profile.descent_time.draw(rng), 40.0, 0.4 * T))
    height = float(np.clip(profile.circuit_height.draw(rng), 150.0, 600.0))
    v_climb = 35.0

    t_td = t_lo + T
    t_roll = v_app / decel
    t_stop = t_td + t_roll
    t_end = t_stop + 8.0
    n = int(math.floor(t_end * hz)) + 1
    t = np.round(np.arange(n) / hz, 6)
    tau = t - t_lo

    # designed outward offset from the reference line, zero near the runway
    d = _offset_shape(tau, T, m, s_target, position)

    # airborne time grid for the along-track integration
    grid = np.linspace(0.0, T, int(T * 10) + 1)
    d_grid = np.interp(grid, tau, d)

    def reach(extra: float, vscale: float) -> tuple[float, Circuit]:
        c = build_circuit(MIN_BASE_X - extra / 3.0, MIN_WIDTH + extra / 6.0, step=2.0)
        tk, vk = _speed_profile(T, v_lo, v_climb, v_cruise, v_app)
        vk = np.where((tk > 10.0) & (tk < T - 150.0), vk * vscale, vk)
        v_grid = np.interp(grid, tk, vk)
        s_grid = _track_s(_circuit_turns(c), s_lo, grid, v_grid, d_grid)
        return float(s_grid[-1] - c.touchdown_s), c

    # grow the circuit (or, if even the smallest is too long, speed up)
    vscale = 1.0
    if reach(0.0, 1.0)[0] < 0:
        vscale = brentq(lambda k: reach(0.0, k)[0], 1.0, 20.0, xtol=1e-6)
        extra = 0.0
    else:
        hi = 1000.0
        while reach(hi, 1.0)[0] > 0:
            hi *= 2.0
        extra = brentq(lambda e: reach(e, 1.0)[0], 0.0, hi, xtol=1e-3)
    circuit = build_circuit(MIN_BASE_X - extra / 3.0, MIN_WIDTH + extra / 6.0)
    tk, vk = _speed_profile(T, v_lo, v_climb, v_cruise, v_app)
    vk = np.where((tk > 10.0) & (tk < T - 150.0), vk * vscale, vk)
    # final pass on the sample times themselves (interpolating a coarser
    # grid across a turn entry would kink the offset path)
    air = (tau >= 0) & (tau < T)
    grid = np.append(tau[air], T)
    s_grid = _track_s(_circuit_turns(circuit), s_lo, grid, np.interp(grid, tk, vk), np.interp(grid, tau, d))
    s_grid += circuit.touchdown_s - s_grid[-1]  # absorb the residual into the roll start
    s_start = s_grid[0] - s_lo

    # along-track reference distance at every sample
    s = np.empty(n)
    roll = (t >= t_wait) & (t < t_lo)
    s[t < t_wait] = 0.0
    s[roll] = 0.5 * roll_accel * (t[roll] - t_wait) ** 2
    s = s + s_start
    s[air] = s_grid[:-1]
    after = tau >= T
    tr = np.minimum(tau[after] - T, t_roll)
    s[after] = circuit.touchdown_s + v_app * tr - 0.5 * decel * tr**2

    x, y, heading, _ = circuit.at(s)

    # vertical reference profile (AGL)
    H = height
    tau_c, tau_d, tau_f = 100.0, descent_s, 10.0
    t_up = 1.0
    agl = np.zeros(n)
    ramp_up = (tau >= -t_up) & (tau < 0)
    agl[ramp_up] = 0.5 * _smoothstep((tau[ramp_up] + t_up) / t_up)
    a_mask = (tau >= 0) & (tau <= T)
    ta = tau[a_mask]
    h = H * _smoothstep(ta / tau_c) * (1.0 - _smoothstep((ta - (T - tau_d)) / tau_d))
    rem = T - ta
    h += sink * rem * (1.0 - _smoothstep(rem / tau_f)) * (rem <= tau_f)
    agl[a_mask] = 0.5 + h
    # gear compression: settle from 0.5 m with the touchdown sink rate
    settle = tau > T
    agl[settle] = 0.5 * np.exp(-2.0 * sink * (tau[settle] - T))

    theta_env = _smoothstep((tau - 60.0) / 30.0) * (1.0 - _smoothstep((tau - (T - 180.0)) / 30.0))
    theta = profile.vertical_offset_max_rad * theta_env * 0.5 * (1.0 + np.sin(2 * math.pi * tau / (0.7 * period)))
    lat_off = d * np.cos(theta)
    up_off = d * np.sin(theta)
    nx, ny = np.sin(heading), -np.cos(heading)  # right normal: outside of a left-hand circuit
    px, py = x + lat_off * nx, y + lat_off * ny

    ref_lon, ref_lat = from_enu(x, y, ORIGIN_LON_LAT)
    lon, lat = from_enu(px, py, ORIGIN_LON_LAT)
    ref_h = FIELD_ELEVATION_M + agl
    asl = ref_h + up_off
    agl_act = agl + up_off

    # kinematics from the sampled positions
    vx, vy = np.gradient(px, t), np.gradient(py, t)
    gs = np.hypot(vx, vy)
    vs = np.gradient(asl, t)
    on_ground = (tau < 0) | (tau > T)
    gs[np.abs(gs) < 1e-9] = 0.0
    tas = np.where(on_ground, gs, np.hypot(gs, vs))
    track = np.unwrap(np.where(gs > 0.5, np.arctan2(vy, vx), heading))
    yaw = np.mod(90.0 - np.degrees(track), 360.0)
    turn_rate = np.gradient(track, t)

    corr = 2.0 * hz
    airborne = ~on_ground
    gamma = np.degrees(np.arctan2(vs, np.maximum(gs, 1.0))) * airborne
    bank = np.degrees(np.arctan(gs * turn_rate / G)) * airborne
    roll = -bank + _ar1(rng, n, bank_noise, corr) * airborne  # positive roll = right wing down

    climb_pitch = np.where(airborne, gamma + aoa0, 0.0) + _ar1(rng, n, 0.4 * bank_noise, corr) * airborne
    w = _smoothstep((tau - (T - 6.0)) / 3.0) * (1.0 - _smoothstep((tau - (T + 0.5)) / 3.0))
    pitch = (1.0 - w) * climb_pitch + w * pitch_td
    aoa = np.where(airborne, pitch - gamma, pitch)

    def control(signal, gain):
        raw = gain * signal + _ar1(rng, n, control_noise, 1.5 * hz)
        return np.clip(raw, -1.0, 1.0)

    roll_input = control(np.gradient(roll, t), 1 / 15.0)
    elevator = control(np.gradient(pitch, t), 1 / 8.0)
    rudder = control(np.zeros(n), 0.0)

    def r(a, k):
        return np.round(a, k)

    stream = FlightStream(
        timestamp=t,
        roll=r(np.clip(roll, -180, 180), 4),
        pitch=r(np.clip(pitch, -180, 180), 4),
        yaw=r(yaw, 4),
        longitude=r(lon, 9),
        latitude=r(lat, 9),
        agl=r(agl_act, 4),
        asl=r(asl, 4),
        tas=r(tas, 4),
        gs=r(gs, 4),
        vertical_speed=r(vs, 4),
        aoa=r(aoa, 4),
        rudder_input=r(rudder, 4),
        elevator_input=r(elevator, 4),
        roll_input=r(roll_input, 4),
        nearest_ref=np.column_stack([r(ref_lon, 9), r(ref_lat, 9), r(ref_h, 4)]),
    )
    truth = {"takeoff_time": t_lo, "touchdown_time": t_td, "full_stop_time": t_stop}
    return stream, truth


# ------------------------------------------------------------------ gaze

_INSTRUMENT_GRID = [(az, el) for el in (-18.0, -26.0, -34.0, -42.0) for az in (-21.0, -7.0, 7.0, 21.0)]


def aoi_anchors() -> tuple[np.ndarray, np.ndarray]:
    """(azimuth, elevation) in degrees and radius of each state's region."""
    anchors = np.zeros((N_STATES, 2))
    radius = np.full(N_STATES, 2.0)
    slots = iter(_INSTRUMENT_GRID)
    for a in AOIS:
        if a is Aoi.LEFT_COCKPIT_GLASS:
            anchors[a.code] = (-55.0, 2.0)
            radius[a.code] = 8.0
        elif a is Aoi.FRONT_COCKPIT_GLASS:
            anchors[a.code] = (0.0, 4.0)
            radius[a.code] = 8.0
        elif a is Aoi.RIGHT_COCKPIT_GLASS:
            anchors[a.code] = (55.0, 2.0)
            radius[a.code] = 8.0
        else:
            anchors[a.code] = next(slots)
    anchors[UNKNOWN_STATE] = (0.0, -62.0)
    radius[UNKNOWN_STATE] = 6.0
    return anchors, radius


def _direction(az_deg: np.ndarray, el_deg: np.ndarray) -> np.ndarray:
    az, el = np.radians(az_deg), np.radians(el_deg)
    return np.column_stack([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])


def _largest_remainder(fracs: np.ndarray, total: int) -> np.ndarray:
    raw = fracs * total
    base = np.floor(raw).astype(int)
    short = total - base.sum()
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    return base


def _visit_sequence(profile, rng, budgets: np.ndarray, hz: float, dwell_scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Budgeted semi-Markov walk: (state, length in samples) per visit."""
    P = profile.transition
    mean_dwell = profile.mean_dwell_s * dwell_scale
    left = budgets.copy()
    min_len = max(1, int(round(0.15 * hz)))
    states, lengths = [], []
    cur = Aoi.FRONT_COCKPIT_GLASS.code if left[Aoi.FRONT_COCKPIT_GLASS.code] > 0 else int(np.argmax(left))
    while left.sum() > 0:
        if left[cur] > 0:
            want = max(min_len, int(round(rng.exponential(mean_dwell[cur]) * hz)))
            take = min(want, left[cur])
            if left[cur] - take < min_len:
                take = left[cur]
            if states and states[-1] == cur:
                lengths[-1] += take
            else:
                states.append(cur)
                lengths.append(take)
            left[cur] -= take
        avail = left > 0
        avail[cur] = False
        if not avail.any():
            if left[cur] > 0:
                continue
            break
        p = np.where(avail, P[cur], 0.0)
        if p.sum() <= 0:
            p = avail.astype(float)
        cur = int(rng.choice(N_STATES, p=p / p.sum()))
    return np.array(states, dtype=int), np.array(lengths, dtype=int)


def _simulate_gaze(profile, rng, duration: float, key_dwell, hz: float):
    n = int(math.floor(duration * hz)) + 1
    t = np.round(np.arange(n) / hz, 6)

    key_total = sum(key_dwell)
    if key_total > 0.85:
        key_dwell = [k * 0.85 / key_total for k in key_dwell]
        key_total = 0.85
    bg = profile.background_weights.copy()
    for a in KEY_AOIS:
        bg[a.code] = 0.0
    bg = bg / bg.sum()
    if math.isfinite(profile.background_concentration):
        alpha = np.where(bg > 0, bg * profile.background_concentration, 0.0)
        draw = np.zeros(N_STATES)
        draw[alpha > 0] = rng.dirichlet(alpha[alpha > 0])
        bg = draw
    shares = (1.0 - key_total) * bg
    for a, k in zip(KEY_AOIS, key_dwell):
        shares[a.code] = k
    budgets = _largest_remainder(shares, n)

    sp = profile.technique_spread
    dwell_scale = math.exp(sp * rng.standard_normal() - 0.5 * sp * sp)
    fixation_s = profile.fixation_ms / 1000.0 * math.exp(sp * rng.standard_normal() - 0.5 * sp * sp)
    states, lengths = _visit_sequence(profile, rng, budgets, hz, dwell_scale)
    anchors, radius = aoi_anchors()

    # split visits into fixations around points inside the AOI region
    min_fix = max(2, int(round(0.09 * hz)))
    seg_state, seg_len, seg_az, seg_el = [], [], [], []
    for st, ln in zip(states, lengths):
        left = int(ln)
        prev = None
        r = radius[st]
        while left > 0:
            k = max(min_fix, int(round(rng.exponential(fixation_s) * hz)))
            if left - k < min_fix:
                k = left
            for _ in range(20):
                rr = r * math.sqrt(rng.uniform())
                ang = rng.uniform(0, 2 * math.pi)
                off = (rr * math.cos(ang), rr * math.sin(ang))
                if prev is None or math.hypot(off[0] - prev[0], off[1] - prev[1]) >= 0.7:
                    break
            prev = off
            seg_state.append(st)
            seg_len.append(k)
            seg_az.append(anchors[st, 0] + off[0])
            seg_el.append(anchors[st, 1] + off[1])
            left -= k
    seg_len = np.array(seg_len)
    state_per_sample = np.repeat(np.array(seg_state), seg_len)
    az = np.repeat(np.array(seg_az), seg_len)
    el = np.repeat(np.array(seg_el), seg_len)
    jitter_sd = profile.fixation_jitter_deg * 5.0  # AR(1) rho=0.98: increment SD ~ jitter
    if jitter_sd > 0:
        rho = 0.98
        corr = -1.0 / math.log(rho)
        az = az + _ar1(rng, n, jitter_sd, corr)
        el = el + _ar1(rng, n, jitter_sd, corr)
    fvl = np.round(_direction(az, el), 6)
    fvr = np.round(_direction(az - 0.4, el), 6)

    eo = np.clip(profile.eye_open.draw(rng) + _ar1(rng, n, 0.03, 0.5 * hz), 0.0, 1.0)
    codes = np.where(state_per_sample == UNKNOWN_STATE, -1, state_per_sample).astype(np.int8)
    head = _ar1(rng, n, 1.5, 5 * hz)
    stream = GazeStream(
        timestamp=t,
        gaze_origin_left=np.round(np.column_stack([-31.5 + head, np.zeros(n) + 0.5 * head, np.zeros(n)]), 3),
        gaze_origin_right=np.round(np.column_stack([31.5 + head, np.zeros(n) + 0.5 * head, np.zeros(n)]), 3),
        gaze_dir_left=fvl,
        gaze_dir_right=fvr,
        eye_open_left=np.round(eo, 4),
        eye_open_right=np.round(np.clip(eo + _ar1(rng, n, 0.01, hz), 0.0, 1.0), 4),
        pupil_pos_left=np.round(np.clip(np.column_stack([_ar1(rng, n, 0.05, hz), _ar1(rng, n, 0.05, hz)]), -1, 1), 4),
        pupil_pos_right=np.round(np.clip(np.column_stack([_ar1(rng, n, 0.05, hz), _ar1(rng, n, 0.05, hz)]), -1, 1), 4),
        aoi=codes,
    )
    return stream, shares


# ------------------------------------------------------------------ cohorts


@dataclass(frozen=True, eq=False)
class CohortSpec:
    n_expert: int = 23
    n_novice: int = 23
    seed: int = 0
    gaze_hz: float = 120.0
    flight_hz: float = 30.0
    expert: ClassProfile | None = None
    novice: ClassProfile | None = None

    def __post_init__(self) -> None:
        if self.n_expert < 1 or self.n_novice < 1:
            raise ValueError("need at least one participant per class")
        if self.gaze_hz <= 0 or self.flight_hz <= 0:
            raise ValueError("sample rates must be positive")

    def profiles(self) -> tuple[ClassProfile, ClassProfile]:
        e, n = default_profiles()
        return self.expert or e, self.novice or n


def latin_hypercube(rng: np.random.Generator, n: int, dims: int) -> np.ndarray:
    """n x dims stratified uniforms: every column hits each of n strata once."""
    u = np.empty((n, dims))
    for j in range(dims):
        u[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return np.clip(u, 1e-9, 1 - 1e-9)


def cohort_plan(spec: CohortSpec) -> list[tuple[str, int, int, np.ndarray]]:
    """(participant_id, label, seed, quantiles) for every participant, experts first."""
    plan = []
    for label, count, prefix in ((1, spec.n_expert, "E"), (0, spec.n_novice, "N")):
        lhs = latin_hypercube(np.random.default_rng(derive_seed(spec.seed, "lhs", label)), count, len(LATENTS))
        width = max(2, len(str(count)))
        for i in range(count):
            pid = f"{prefix}{i + 1:0{width}d}"
            plan.append((pid, label, derive_seed(spec.seed, "participant", pid), lhs[i]))
    return plan


def _simulate_planned(spec: CohortSpec, item) -> SimulatedParticipant:
    pid, label, seed, q = item
    expert, novice = spec.profiles()
    return simulate_participant(expert if label == 1 else novice, seed, pid, spec.gaze_hz, spec.flight_hz, q)


def simulate_cohort(spec: CohortSpec, jobs: int = 1):
    """Yield ``SimulatedParticipant`` objects in plan order (in memory, no files)."""
    plan = cohort_plan(spec)
    if jobs <= 1:
        for item in plan:
            yield _simulate_planned(spec, item)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_simulate_planned, [spec] * len(plan), plan)


def _write_planned(spec: CohortSpec, out: Path, item) -> tuple[str, int, str, str]:
    sim = _simulate_planned(spec, item)
    pid, label = item[0], item[1]
    gaze_rel, flight_rel = f"gaze/{pid}.csv", f"flight/{pid}.csv"
    write_gaze_log(sim.record.gaze, out / gaze_rel)
    write_flight_log(sim.record.flight, out / flight_rel)
    return pid, label, gaze_rel, flight_rel


def generate_cohort(spec: CohortSpec, out: str | Path, jobs: int = 1) -> Path:
    """Write one gaze and one flight CSV per participant plus ``manifest.csv``.

    Output bytes depend only on ``spec``, never on ``jobs``.
    """
    out = Path(out)
    (out / "gaze").mkdir(parents=True, exist_ok=True)
    (out / "flight").mkdir(parents=True, exist_ok=True)
    plan = cohort_plan(spec)
    if jobs <= 1:
        rows = [_write_planned(spec, out, item) for item in plan]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_write_planned, [spec] * len(plan), [out] * len(plan), plan))
    manifest = out / "manifest.csv"
    write_manifest(rows, manifest)
    return manifest


def manifest_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
