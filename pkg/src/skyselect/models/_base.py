from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from ..errors import ConfigError, DataError


def as_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError(f"training data shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] == 0:
        raise DataError("no training rows")
    if not np.isfinite(X).all():
        raise DataError("training matrix has non-finite entries")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    y = y.astype(int)
    if len(np.unique(y)) < 2:
        raise DataError("training labels contain a single class")
    return X, y


def canonical_rows(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows sorted lexicographically by (features..., label).

    Training on the canonical order makes every learner independent of the
    order in which rows arrive.
    """
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    return X[order], y[order]


def default_columns(d: int) -> tuple[str, ...]:
    return tuple(f"x{j}" for j in range(d))


@dataclass(frozen=True)
class Standardizer:
    """Column z-scoring with population SD; constant columns map to 0."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        return cls(mean, np.where(sd > 0, sd, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


class Model:
    """Common surface of every trained classifier.

    ``score`` returns the raw decision value used for ranking (AUC);
    ``predict`` thresholds it at the model's natural boundary.
    """

    kind: ClassVar[str] = ""
    threshold: ClassVar[float] = 0.5
    columns: tuple[str, ...]

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.columns):
            raise ConfigError(
                f"{self.kind}: expected {len(self.columns)} columns {list(self.columns)[:5]}..., got {X.shape[1]}"
            )
        return X

    def check_columns(self, names: Sequence[str]) -> None:
        if tuple(names) != tuple(self.columns):
            raise ConfigError(f"{self.kind}: column mismatch; model trained on {list(self.columns)}")

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X, threshold: float | None = None) -> np.ndarray:
        t = self.threshold if threshold is None else threshold
        return (self.score(X) > t).astype(int)

    def to_dict(self) -> dict:
        raise NotImplementedError


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out
