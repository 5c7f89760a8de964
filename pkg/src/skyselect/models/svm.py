"""Soft-margin SVM trained by sequential minimal optimization.

The dual problem

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,

with Q_ij = y_i y_j K(x_i, x_j) and labels y in {-1, +1}, is solved two
multipliers at a time. The working pair is chosen by maximal violation for
the first index and by second-order gain for the second; the loop stops when
the maximal KKT violation gap falls below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError
from ._base import Model, Standardizer, as_training_data, canonical_rows, default_columns

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def linear_kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T


@dataclass
class SmoResult:
    alpha: np.ndarray
    b: float
    iterations: int
    gap: float
    objective: float


def dual_objective(alpha: np.ndarray, K: np.ndarray, ys: np.ndarray) -> float:
    """1/2 a^T Q a - sum(a) for labels ``ys`` in {-1, +1}."""
    v = alpha * ys
    return float(0.5 * v @ K @ v - alpha.sum())


def smo(
    K: np.ndarray,
    ys: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int | None = None,
    alpha0: np.ndarray | None = None,
) -> SmoResult:
    """Solve the SVM dual for a precomputed kernel matrix.

    ``ys`` holds labels in {-1, +1}. ``alpha0`` (feasible) warm-starts the
    solver. Raises ``ConvergenceError`` after ``max_iter`` pair updates.
    """
    n = len(ys)
    ys = ys.astype(float)
    Q = (ys[:, None] * ys[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n) if alpha0 is None else np.clip(np.asarray(alpha0, dtype=float), 0.0, C)
    G = Q @ alpha - 1.0
    if max_iter is None:
        max_iter = max(100_000, 100 * n)
    pos = ys > 0

    it = 0
    gap = np.inf
    while True:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        vals = -ys * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        v_up = np.where(up, vals, -np.inf)
        i = int(np.argmax(v_up))
        m = v_up[i]
        M = float(np.min(np.where(low, vals, np.inf)))
        gap = m - M
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                "SMO did not reach the KKT tolerance", it, {"gap": float(gap), "tol": tol, "n": n}
            )
        # second index: largest second-order decrease among violating candidates
        bgap = m - vals
        cand = low & (bgap > 0)
        quad = QD[i] + QD - 2.0 * ys[i] * ys * Q[i]
        quad = np.where(quad > 0, quad, TAU)
        gain = np.where(cand, -(bgap * bgap) / quad, np.inf)
        j = int(np.argmin(gain))

        ai, aj = alpha[i], alpha[j]
        if ys[i] != ys[j]:
            q = QD[i] + QD[j] + 2.0 * Q[i, j]
            delta = (-G[i] - G[j]) / (q if q > 0 else TAU)
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            q = QD[i] + QD[j] - 2.0 * Q[i, j]
            delta = (G[i] - G[j]) / (q if q > 0 else TAU)
            s = ai + aj
            ni, nj = ai - delta, aj + delta
            if s > C:
                if ni > C:
                    ni, nj = C, s - C
            elif nj < 0:
                nj, ni = 0.0, s
            if s > C:
                if nj > C:
                    nj, ni = C, s - C
            elif ni < 0:
                ni, nj = 0.0, s
        di, dj = ni - ai, nj - aj
        alpha[i], alpha[j] = ni, nj
        G += Q[:, i] * di + Q[:, j] * dj
        it += 1

    # bias: average over free multipliers, else midpoint of the feasible range
    yG = ys * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        ub_mask = np.where(at_upper, ~pos, pos)
        lb_mask = np.where(at_upper, pos, ~pos)
        ub = float(yG[ub_mask].min()) if ub_mask.any() else np.inf
        lb = float(yG[lb_mask].max()) if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    obj = float(0.5 * alpha @ (G - 1.0))  # 1/2 a^T Q a - sum(a) = 1/2 a^T (G + 1) - sum(a)
    return SmoResult(alpha, -rho, it, float(gap), obj)


def kkt_residuals(alpha: np.ndarray, ys: np.ndarray, f: np.ndarray, C: float) -> np.ndarray:
    """Per-sample violation of the KKT conditions given decision values ``f``."""
    m = ys * f
    r = np.zeros_like(m)
    lo = alpha <= 0
    hi = alpha >= C
    free = ~lo & ~hi
    r[lo] = np.maximum(0.0, 1.0 - m[lo])
    r[hi] = np.maximum(0.0, m[hi] - 1.0)
    r[free] = np.abs(m[free] - 1.0)
    return r


@dataclass(eq=False)
class SvmModel(Model):
    kind = "svm"
    threshold = 0.0

    columns: tuple[str, ...]
    standardizer: Standardizer
    support_vectors: np.ndarray  # standardized
    dual_coef: np.ndarray  # alpha_i * y_i, y in {-1, +1}
    b: float
    kernel: str
    gamma: float
    C: float
    iterations: int = 0
    gap: float = 0.0
    alpha: np.ndarray = field(default=None, repr=False)  # all multipliers, canonical row order

    def decision(self, Z: np.ndarray) -> np.ndarray:
        if self.kernel == "linear":
            K = linear_kernel(Z, self.support_vectors)
        else:
            K = rbf_kernel(Z, self.support_vectors, self.gamma)
        return K @ self.dual_coef + self.b

    def score(self, X) -> np.ndarray:
        return self.decision(self.standardizer.transform(self._check(X)))

    @property
    def weights(self) -> np.ndarray:
        """Primal weights in standardized space (linear kernel only)."""
        if self.kernel != "linear":
            raise ValueError("weights are only defined for the linear kernel")
        return self.dual_coef @ self.support_vectors

    def to_dict(self) -> dict:
        return {
            "standardizer": self.standardizer.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "b": self.b,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "C": self.C,
        }

    @classmethod
    def from_dict(cls, columns, d: dict) -> "SvmModel":
        return cls(
            tuple(columns),
            Standardizer.from_dict(d["standardizer"]),
            np.array(d["support_vectors"], dtype=float).reshape(-1, len(columns)),
            np.array(d["dual_coef"], dtype=float),
            float(d["b"]),
            d["kernel"],
            float(d["gamma"]),
            float(d["C"]),
        )


def rbf_gamma(Z: np.ndarray) -> float:
    """1 / (d * variance of all entries); 1/d when the variance is zero."""
    var = float(Z.var())
    d = Z.shape[1]
    return 1.0 / (d * var) if var > 0 else 1.0 / d


def train_svm(
    X,
    y,
    columns=None,
    C: float = 1.0,
    kernel: str = "rbf",
    tol: float = 1e-3,
    max_iter: int | None = None,
    gamma: float | None = None,
    alpha0: np.ndarray | None = None,
    canonical: bool = True,
) -> SvmModel:
    """Fit on z-scored inputs. ``alpha0`` warm-starts (canonical row order)."""
    X, y = as_training_data(X, y)
    if kernel not in ("rbf", "linear"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if canonical:
        X, y = canonical_rows(X, y)
    columns = tuple(columns) if columns is not None else default_columns(X.shape[1])
    std = Standardizer.fit(X)
    Z = std.transform(X)
    ys = np.where(y == 1, 1.0, -1.0)
    if kernel == "linear":
        K = linear_kernel(Z, Z)
        g = 0.0
    else:
        g = rbf_gamma(Z) if gamma is None else float(gamma)
        K = rbf_kernel(Z, Z, g)
    res = smo(K, ys, C=C, tol=tol, max_iter=max_iter, alpha0=alpha0)
    sv = res.alpha > 0
    return SvmModel(
        columns,
        std,
        Z[sv],
        res.alpha[sv] * ys[sv],
        res.b,
        kernel,
        g,
        C,
        res.iterations,
        res.gap,
        res.alpha,
    )
