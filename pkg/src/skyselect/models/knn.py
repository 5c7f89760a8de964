"""k-nearest-neighbour classifier on z-scored features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import Model, Standardizer, as_training_data, default_columns


@dataclass(eq=False)
class KnnModel(Model):
    """Score = fraction of expert labels among the k nearest training rows.

    Neighbours are ordered by (distance, label), so rows tied at the k-th
    distance are taken from class 0 first.
    """

    kind = "knn"
    threshold = 0.5

    columns: tuple[str, ...]
    standardizer: Standardizer
    train_Z: np.ndarray
    train_y: np.ndarray
    k: int = 5

    def score(self, X) -> np.ndarray:
        Z = self.standardizer.transform(self._check(X))
        k = min(self.k, len(self.train_y))
        out = np.empty(len(Z))
        for r, z in enumerate(Z):
            dist = np.sqrt(((self.train_Z - z) ** 2).sum(axis=1))
            order = np.lexsort((self.train_y, dist))
            out[r] = self.train_y[order[:k]].mean()
        return out

    def to_dict(self) -> dict:
        return {
            "standardizer": self.standardizer.to_dict(),
            "train_Z": self.train_Z.tolist(),
            "train_y": self.train_y.tolist(),
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, columns, d: dict) -> "KnnModel":
        return cls(
            tuple(columns),
            Standardizer.from_dict(d["standardizer"]),
            np.array(d["train_Z"], dtype=float).reshape(-1, len(columns)),
            np.array(d["train_y"], dtype=int),
            int(d["k"]),
        )


def train_knn(X, y, columns=None, k: int = 5) -> KnnModel:
    X, y = as_training_data(X, y)
    if k < 1:
        raise ValueError("k must be >= 1")
    std = Standardizer.fit(X)
    columns = tuple(columns) if columns is not None else default_columns(X.shape[1])
    return KnnModel(columns, std, std.transform(X), y.copy(), k)
