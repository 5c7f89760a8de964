"""Gradient-boosted regression trees on the logistic loss.

Each round fits a tree to the loss gradient with leaf-wise growth: the leaf
whose best split has the largest gain is split next, up to ``num_leaves``
leaves. Split gain and leaf values are the second-order (Newton) ones with
no L2 term:

    gain = G_L^2 / H_L + G_R^2 / H_R - G^2 / H,    value = -G / H,

where G and H are the sums of gradients p - y and hessians p (1 - p). Splits
leaving fewer than ``min_data_in_leaf`` rows on either side are illegal.
The initial score is the log-odds of the training prior. Splits are found
exactly over presorted feature values (no histogram binning).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._base import Model, as_training_data, canonical_rows, default_columns, sigmoid

TIE_EPS = 1e-12
MIN_HESSIAN = 1e-3


@dataclass
class RegTree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.value) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        left = np.array(self.left)
        right = np.array(self.right)
        feat = np.array(self.feature)
        thr = np.array(self.threshold)
        active = left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            node[idx] = np.where(X[idx, feat[nd]] <= thr[nd], left[nd], right[nd])
            active = left[node] >= 0
        return np.array(self.value)[node]

    @property
    def n_leaves(self) -> int:
        return sum(1 for l in self.left if l < 0)

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": [None if math.isnan(t) else t for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegTree":
        return cls(
            list(d["feature"]),
            [math.nan if t is None else float(t) for t in d["threshold"]],
            list(d["left"]),
            list(d["right"]),
            [float(v) for v in d["value"]],
        )


@dataclass(frozen=True)
class _Candidate:
    gain: float
    feature: int
    threshold: float


def _best_split(
    Xs: np.ndarray, order: np.ndarray, member: np.ndarray, g: np.ndarray, h: np.ndarray, min_leaf: int
) -> _Candidate | None:
    """Best legal split of the rows flagged in ``member``.

    ``order`` holds each column's row order by value (presorted once);
    ``Xs`` the matching sorted values.
    """
    m = int(member.sum())
    if m < 2 * min_leaf:
        return None
    d = order.shape[1]
    keep = member[order]  # (n, d), same count m in every column
    idx = order.T[keep.T].reshape(d, m).T
    vals = Xs.T[keep.T].reshape(d, m).T
    G, H = g[idx], h[idx]
    cg = np.cumsum(G, axis=0)[:-1]
    ch = np.cumsum(H, axis=0)[:-1]
    Gt, Ht = float(G[:, 0].sum()), float(H[:, 0].sum())
    nL = np.arange(1, m)[:, None]
    legal = (vals[1:] > vals[:-1]) & (nL >= min_leaf) & (m - nL >= min_leaf)
    legal &= (ch >= MIN_HESSIAN) & (Ht - ch >= MIN_HESSIAN)
    if not legal.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = cg**2 / ch + (Gt - cg) ** 2 / (Ht - ch) - Gt**2 / Ht
    gain = np.where(legal, gain, -np.inf)
    best = gain.max()
    if not best > 0:
        return None
    cand = gain >= best - TIE_EPS
    f = int(np.flatnonzero(cand.any(axis=0))[0])
    k = int(np.flatnonzero(cand[:, f])[0])
    a, b = vals[k, f], vals[k + 1, f]
    thr = 0.5 * (a + b)
    if not a <= thr < b:
        thr = a
    return _Candidate(float(gain[k, f]), f, float(thr))


def fit_tree(
    X: np.ndarray,
    order: np.ndarray,
    Xs: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    num_leaves: int,
    min_leaf: int,
    learning_rate: float,
) -> RegTree:
    n = len(g)
    tree = RegTree()

    def leaf_value(mask):
        return -learning_rate * float(g[mask].sum()) / max(float(h[mask].sum()), MIN_HESSIAN)

    all_rows = np.ones(n, dtype=bool)
    root = tree.add(leaf_value(all_rows))
    leaves = {root: (all_rows, _best_split(Xs, order, all_rows, g, h, min_leaf))}
    while tree.n_leaves < num_leaves:
        # leaf with the largest gain; ties to the lowest node id
        pick = None
        for node in sorted(leaves):
            c = leaves[node][1]
            if c is not None and (pick is None or c.gain > leaves[pick][1].gain + TIE_EPS):
                pick = node
        if pick is None:
            break
        mask, c = leaves.pop(pick)
        go_left = mask & (X[:, c.feature] <= c.threshold)
        go_right = mask & ~go_left
        tree.feature[pick] = c.feature
        tree.threshold[pick] = c.threshold
        l = tree.add(leaf_value(go_left))
        r = tree.add(leaf_value(go_right))
        tree.left[pick], tree.right[pick] = l, r
        leaves[l] = (go_left, _best_split(Xs, order, go_left, g, h, min_leaf))
        leaves[r] = (go_right, _best_split(Xs, order, go_right, g, h, min_leaf))
    return tree


@dataclass(eq=False)
class GbmModel(Model):
    kind = "lgbm"
    threshold = 0.5

    columns: tuple[str, ...]
    init_score: float
    trees: list[RegTree]
    learning_rate: float = 0.1
    num_leaves: int = 31
    min_data_in_leaf: int = 20

    def raw_score(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.full(len(X), self.init_score)
        for t in self.trees:
            out += t.predict(X)
        return out

    def score(self, X) -> np.ndarray:
        return sigmoid(self.raw_score(X))

    def to_dict(self) -> dict:
        return {
            "init_score": self.init_score,
            "learning_rate": self.learning_rate,
            "num_leaves": self.num_leaves,
            "min_data_in_leaf": self.min_data_in_leaf,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, columns, d: dict) -> "GbmModel":
        return cls(
            tuple(columns),
            float(d["init_score"]),
            [RegTree.from_dict(t) for t in d["trees"]],
            float(d["learning_rate"]),
            int(d["num_leaves"]),
            int(d["min_data_in_leaf"]),
        )


def train_gbm(
    X,
    y,
    columns=None,
    n_rounds: int = 100,
    learning_rate: float = 0.1,
    num_leaves: int = 31,
    min_data_in_leaf: int = 20,
) -> GbmModel:
    X, y = as_training_data(X, y)
    X, y = canonical_rows(X, y)
    columns = tuple(columns) if columns is not None else default_columns(X.shape[1])
    prior = float(y.mean())
    init = math.log(prior / (1.0 - prior))
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    F = np.full(len(y), init)
    trees: list[RegTree] = []
    for _ in range(n_rounds):
        p = sigmoid(F)
        g, h = p - y, p * (1.0 - p)
        tree = fit_tree(X, order, Xs, g, h, num_leaves, min_data_in_leaf, learning_rate)
        if tree.n_leaves == 1:
            break  # no legal split: every further round would add the same constant
        trees.append(tree)
        F += tree.predict(X)
    return GbmModel(columns, init, trees, learning_rate, num_leaves, min_data_in_leaf)
