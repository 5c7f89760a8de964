"""L2-regularised logistic regression fitted by accelerated gradient ascent.

The maximised objective is

    J(w, b) = C * sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)] - 1/2 ||w||^2,

with p_i = sigmoid(w . x_i + b); the intercept is not penalised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import Model, Standardizer, as_training_data, canonical_rows, default_columns, sigmoid


def _log1pexp(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def logreg_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float = 1.0) -> float:
    """J at ``theta = [w..., b]``."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # y log p + (1-y) log(1-p) = y z - log(1 + e^z)
    ll = float(np.sum(y * z - _log1pexp(z)))
    return C * ll - 0.5 * float(w @ w)


def logreg_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float = 1.0) -> np.ndarray:
    """Analytic gradient of ``logreg_objective``."""
    w, b = theta[:-1], theta[-1]
    r = y - sigmoid(X @ w + b)
    return np.concatenate((C * (X.T @ r) - w, [C * r.sum()]))


@dataclass(eq=False)
class LogRegModel(Model):
    kind = "lr"
    threshold = 0.5

    columns: tuple[str, ...]
    standardizer: Standardizer
    w: np.ndarray
    b: float
    C: float = 1.0
    iterations: int = 0
    grad_norm: float = 0.0

    def score(self, X) -> np.ndarray:
        Z = self.standardizer.transform(self._check(X))
        return sigmoid(Z @ self.w + self.b)

    def to_dict(self) -> dict:
        return {"standardizer": self.standardizer.to_dict(), "w": self.w.tolist(), "b": self.b, "C": self.C}

    @classmethod
    def from_dict(cls, columns, d: dict) -> "LogRegModel":
        return cls(
            tuple(columns),
            Standardizer.from_dict(d["standardizer"]),
            np.array(d["w"], dtype=float),
            float(d["b"]),
            float(d["C"]),
        )


def fit_logreg(Z: np.ndarray, y: np.ndarray, C: float = 1.0, tol: float = 1e-4, max_iter: int = 1000):
    """Nesterov-accelerated ascent with adaptive restart.

    Step 1/L with L the Lipschitz bound C * ||[Z 1]||_2^2 / 4 + 1. Returns
    (theta, iterations, final gradient norm).
    """
    n, d = Z.shape
    A = np.column_stack([Z, np.ones(n)])
    L = C * np.linalg.norm(A, 2) ** 2 / 4.0 + 1.0
    theta = np.zeros(d + 1)
    prev = theta.copy()
    t = 1.0
    g = logreg_gradient(theta, Z, y, C)
    it = 0
    f_prev = logreg_objective(theta, Z, y, C)
    while np.linalg.norm(g) >= tol and it < max_iter:
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = theta + ((t - 1.0) / t_next) * (theta - prev)
        gv = logreg_gradient(v, Z, y, C)
        nxt = v + gv / L
        f_next = logreg_objective(nxt, Z, y, C)
        if f_next < f_prev:  # restart momentum from a plain step
            t_next = 1.0
            nxt = theta + g / L
            f_next = logreg_objective(nxt, Z, y, C)
        prev, theta, t, f_prev = theta, nxt, t_next, f_next
        g = logreg_gradient(theta, Z, y, C)
        it += 1
    return theta, it, float(np.linalg.norm(g))


def train_logreg(X, y, columns=None, C: float = 1.0, tol: float = 1e-4, max_iter: int = 1000) -> LogRegModel:
    X, y = as_training_data(X, y)
    X, y = canonical_rows(X, y)
    std = Standardizer.fit(X)
    theta, it, gn = fit_logreg(std.transform(X), y.astype(float), C, tol, max_iter)
    columns = tuple(columns) if columns is not None else default_columns(X.shape[1])
    return LogRegModel(columns, std, theta[:-1], float(theta[-1]), C, it, gn)
