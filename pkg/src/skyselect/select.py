"""Feature ranking (mutual information, SVM-RFE, random-forest importance) and top-k selection.

Rankers take a complete (imputed) matrix whose columns are in registry
order, so column position doubles as the registry-index tie-breaker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .models._base import Standardizer, as_training_data
from .models.svm import linear_kernel, smo
from .models.tree import train_forest

METHODS: tuple[str, ...] = ("mic", "svmrfe", "rf")
TIE_RULE = "descending score; ties by ascending registry index"
MIC_BINS = 5
SCORE_DIGITS = 12


@dataclass(frozen=True)
class RankedFeatures:
    names: tuple[str, ...]
    scores: tuple[float, ...]
    method: str
    tie_rule: str = TIE_RULE

    def __len__(self) -> int:
        return len(self.names)

    def top(self, k: int) -> tuple[str, ...]:
        return self.names[:k]

    def to_csv(self) -> str:
        lines = ["rank,name,score"]
        lines += [f"{i},{n},{s:.9g}" for i, (n, s) in enumerate(zip(self.names, self.scores), 1)]
        return "\n".join(lines) + "\n"


def _ranked(names: Sequence[str], scores: np.ndarray, method: str) -> RankedFeatures:
    scores = np.asarray(scores, dtype=float)
    if not np.isfinite(scores).all():
        raise DataError(f"{method}: non-finite feature score")
    # rounding keeps float noise from overriding the index tie-break
    order = sorted(range(len(names)), key=lambda j: (-round(float(scores[j]), SCORE_DIGITS), j))
    return RankedFeatures(tuple(names[j] for j in order), tuple(float(scores[j]) for j in order), method)


def _check(X, y, names) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("feature ranking needs at least 2 rows")
    if np.isnan(X).any():
        raise DataError("feature matrix has missing values; impute before ranking")
    X, y = as_training_data(X, y)
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise DataError(f"{len(names)} names for {X.shape[1]} columns")
    return X, y, names


def median_impute(train: np.ndarray, *others: np.ndarray) -> tuple[np.ndarray, ...]:
    """Fill NaN with training-column medians (0 for an all-missing column)."""
    train = np.asarray(train, dtype=float)
    with np.errstate(all="ignore"):
        med = np.array([np.median(c[~np.isnan(c)]) if (~np.isnan(c)).any() else 0.0 for c in train.T])
    out = []
    for A in (train,) + others:
        A = np.array(A, dtype=float)
        r, c = np.nonzero(np.isnan(A))
        A[r, c] = med[c]
        out.append(A)
    return tuple(out)


# ------------------------------------------------------------------ mutual information


def equal_frequency_bins(x: np.ndarray, bins: int = MIC_BINS) -> np.ndarray:
    """Bin codes 0..B-1 from ranks; tied values always share a bin.

    With at most ``bins`` distinct values each value is its own bin.
    Otherwise a value whose count of strictly smaller values is r goes to
    bin floor(B r / n). Codes depend only on the order of values, so any
    strictly increasing transform leaves them unchanged.
    """
    x = np.asarray(x, dtype=float)
    uniq, inv = np.unique(x, return_inverse=True)
    if len(uniq) <= bins:
        return inv
    less = np.searchsorted(np.sort(x), x, side="left")
    return (bins * less) // len(x)


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Empirical MI in nats between two discrete code vectors.

    Evaluated as sum p(a,b) ln[p(a,b) / (p(a) p(b))] over occupied cells.
    """
    a = np.unique(np.asarray(a), return_inverse=True)[1]
    b = np.unique(np.asarray(b), return_inverse=True)[1]
    n = len(a)
    joint = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(joint, (a, b), 1.0)
    pa = joint.sum(1, keepdims=True)
    pb = joint.sum(0, keepdims=True)
    nz = joint > 0
    mi = (joint[nz] / n) * np.log(joint[nz] * n / (pa @ pb)[nz])
    return max(float(mi.sum()), 0.0)


def mic_scores(X, y, bins: int = MIC_BINS) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.array([mutual_information(equal_frequency_bins(X[:, j], bins), y) for j in range(X.shape[1])])


def mic_rank(X, y, names=None, bins: int = MIC_BINS) -> RankedFeatures:
    X, y, names = _check(X, y, names)
    return _ranked(names, mic_scores(X, y, bins), "mic")


# ------------------------------------------------------------------ SVM-RFE


def svm_rfe_order(X, y, C: float = 1.0, tol: float = 1e-3) -> list[int]:
    """Column indices in elimination order (first eliminated first).

    One linear SVM per round on the surviving z-scored columns; the column
    with the smallest squared weight goes, the higher index on ties. The
    previous round's multipliers warm-start the next (they stay feasible).
    """
    X, y = as_training_data(X, y)
    Z = Standardizer.fit(X).transform(X)
    ys = np.where(y == 1, 1.0, -1.0)
    alive = list(range(Z.shape[1]))
    K = linear_kernel(Z, Z)
    alpha = None
    order = []
    while len(alive) > 1:
        res = smo(K, ys, C=C, tol=tol, alpha0=alpha)
        alpha = res.alpha
        w2 = ((alpha * ys) @ Z[:, alive]) ** 2
        lo = w2.min()
        tied = [alive[i] for i in np.flatnonzero(np.isclose(w2, lo, rtol=1e-9, atol=1e-12))]
        drop = max(tied)
        order.append(drop)
        alive.remove(drop)
        K = K - np.outer(Z[:, drop], Z[:, drop])
    order.extend(alive)
    return order


def svm_rfe_rank(X, y, names=None, C: float = 1.0) -> RankedFeatures:
    """Score = elimination round (survivor scores d), so rank = reverse elimination order."""
    X, y, names = _check(X, y, names)
    scores = np.zeros(X.shape[1])
    for rnd, j in enumerate(svm_rfe_order(X, y, C), 1):
        scores[j] = rnd
    return _ranked(names, scores, "svmrfe")


# ------------------------------------------------------------------ random forest


def rf_rank(X, y, names=None, n_trees: int = 100, seed: int = 0) -> RankedFeatures:
    X, y, names = _check(X, y, names)
    forest = train_forest(X, y, n_trees=n_trees, seed=seed)
    return _ranked(names, forest.feature_importances, "rf")


# ------------------------------------------------------------------ dispatch


def check_method(method: str) -> str:
    if method not in METHODS:
        raise ConfigError(f"unknown selection method {method!r}; choose from {list(METHODS)}")
    return method


def rank_features(method: str, X, y, names=None, seed: int = 0) -> RankedFeatures:
    check_method(method)
    if method == "mic":
        return mic_rank(X, y, names)
    if method == "svmrfe":
        return svm_rfe_rank(X, y, names)
    return rf_rank(X, y, names, seed=seed)


def check_proportion(proportion: float) -> float:
    p = float(proportion)
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"proportion must be in (0, 1], got {proportion}")
    return p


def top_k(n_features: int, proportion: float) -> int:
    """floor(proportion * n), at least 1.

    The product is rounded to 9 decimals first so that e.g. 0.29 * 100
    (28.999999999999996 in binary floating point) counts as 29.
    """
    p = check_proportion(proportion)
    return max(1, math.floor(round(p * n_features, 9)))


def select_top(ranked: RankedFeatures, proportion: float) -> tuple[str, ...]:
    return ranked.top(top_k(len(ranked), proportion))
