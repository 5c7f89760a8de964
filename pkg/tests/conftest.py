import io

import numpy as np
import pytest

from skyselect.registry import ALL_FEATURES, FeatureMatrix
from skyselect.synth import CohortSpec, default_profiles, simulate_participant
from skyselect.telemetry import FLIGHT_COLUMNS, GAZE_COLUMNS


def unit(deg_x: float, deg_y: float = 0.0) -> np.ndarray:
    """Unit gaze direction at horizontal/vertical angles (degrees) from +z."""
    ax, ay = np.radians(deg_x), np.radians(deg_y)
    v = np.array([np.sin(ax) * np.cos(ay), np.sin(ay), np.cos(ax) * np.cos(ay)])
    return v / np.linalg.norm(v)


def gaze_row(t: float, aoi: str = "attitude indicator", d=(0.0, 0.0, 1.0), **over) -> dict:
    row = {c: 0.0 for c in GAZE_COLUMNS}
    row.update(timestamp=t, FVL_X=d[0], FVL_Y=d[1], FVL_Z=d[2], FVR_X=d[0], FVR_Y=d[1], FVR_Z=d[2])
    row.update(EOL=0.8, EOR=0.8, AOIName=aoi)
    row.update(over)
    return row


def flight_row(t: float, **over) -> dict:
    row = {c: 0.0 for c in FLIGHT_COLUMNS}
    row.update(timestamp=t, longitude=120.0, latitude=30.0, agl=10.0, asl=15.0)
    row.update(nearest_ref_longitude=120.0, nearest_ref_latitude=30.0, nearest_ref_height=15.0)
    row.update(over)
    return row


def to_csv(rows: list[dict], columns) -> io.StringIO:
    lines = [",".join(columns)]
    lines += [",".join(str(r[c]) for c in columns) for r in rows]
    return io.StringIO("\n".join(lines) + "\n")


def toy_matrix(n_per_class: int = 6, n_noise: int = 3, seed: int = 0) -> FeatureMatrix:
    """Informative column first, then Gaussian noise columns."""
    rng = np.random.default_rng(seed)
    y = np.array([1] * n_per_class + [0] * n_per_class)
    signal = y * 2.0 + rng.normal(0, 0.3, len(y))
    X = np.column_stack([signal] + [rng.normal(size=len(y)) for _ in range(n_noise)])
    names = tuple(f"f{j}" for j in range(X.shape[1]))
    ids = tuple(f"P{i:02d}" for i in range(len(y)))
    return FeatureMatrix(ids, X, y, names)


@pytest.fixture(scope="session")
def profiles():
    return default_profiles()


@pytest.fixture(scope="session")
def expert_participant(profiles):
    """One simulated expert at reduced sample rates."""
    return simulate_participant(profiles[0], seed=3, participant_id="E01", gaze_hz=30, flight_hz=10)


@pytest.fixture(scope="session")
def small_cohort_dir(tmp_path_factory):
    """A written 3+3 cohort at low sample rates; returns the manifest path."""
    from skyselect.synth import generate_cohort

    out = tmp_path_factory.mktemp("cohort")
    return generate_cohort(CohortSpec(n_expert=3, n_novice=3, seed=5, gaze_hz=20, flight_hz=10), out)


@pytest.fixture(scope="session")
def small_features(small_cohort_dir):
    from skyselect.registry import extract_cohort
    from skyselect.telemetry import load_cohort

    fm = extract_cohort(load_cohort(small_cohort_dir))
    assert fm.names == ALL_FEATURES
    return fm
