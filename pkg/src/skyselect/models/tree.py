"""CART classification trees (Gini), a bootstrap random forest, and DOT export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._base import Model, as_training_data, canonical_rows, default_columns

TIE_EPS = 1e-12


def gini(pos: float, n: float) -> float:
    """Gini impurity of a node with ``pos`` positives among ``n``."""
    if n <= 0:
        return 0.0
    p = pos / n
    return 2.0 * p * (1.0 - p)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    n_left: int
    pos_left: float
    weighted_impurity: float


def best_gini_split(X: np.ndarray, y: np.ndarray, features: np.ndarray) -> Split | None:
    """Lowest weighted child Gini over ``features`` (ascending indices).

    Candidate thresholds are midpoints between consecutive distinct values;
    rows with x <= threshold go left. Ties within ``TIE_EPS`` go to the lower
    feature index, then the lower threshold. None when no feature varies.
    """
    m = len(y)
    if m < 2 or len(features) == 0:
        return None
    Xs = X[:, features]
    order = np.argsort(Xs, axis=0, kind="stable")
    v = np.take_along_axis(Xs, order, axis=0)
    cum = np.cumsum(y[order], axis=0)[:-1]  # positives left of cut k+1
    valid = v[1:] > v[:-1]
    if not valid.any():
        return None
    nL = np.arange(1, m, dtype=float)[:, None]
    nR = m - nL
    pL = cum
    pR = y.sum() - pL
    score = (2.0 * pL * (nL - pL) / nL + 2.0 * pR * (nR - pR) / nR) / m
    score = np.where(valid, score, np.inf)
    best = score.min()
    cand = score <= best + TIE_EPS
    # first feature (column order) holding a candidate, first cut within it
    f_pos = int(np.flatnonzero(cand.any(axis=0))[0])
    k = int(np.flatnonzero(cand[:, f_pos])[0])
    a, b = v[k, f_pos], v[k + 1, f_pos]
    thr = 0.5 * (a + b)
    if not a <= thr < b:  # adjacent floats: the midpoint rounded up onto b
        thr = a
    return Split(int(features[f_pos]), float(thr), k + 1, float(pL[k, f_pos]), float(score[k, f_pos]))


@dataclass
class TreeArrays:
    """Flat node table; children are -1 at leaves."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    n_samples: list[int] = field(default_factory=list)
    n_pos: list[float] = field(default_factory=list)
    impurity: list[float] = field(default_factory=list)

    def add(self, n: int, pos: float) -> int:
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.n_samples.append(n)
        self.n_pos.append(pos)
        self.impurity.append(gini(pos, n))
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index of every row."""
        node = np.zeros(len(X), dtype=int)
        feat = np.array(self.feature)
        thr = np.array(self.threshold)
        left = np.array(self.left)
        right = np.array(self.right)
        active = left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, feat[nd]] <= thr[nd]
            node[idx] = np.where(go_left, left[nd], right[nd])
            active = left[node] >= 0
        return node

    def leaf_probability(self) -> np.ndarray:
        n = np.array(self.n_samples, dtype=float)
        return np.array(self.n_pos) / n

    def importances(self, d: int) -> np.ndarray:
        """Normalized total Gini decrease per feature (zeros if no split)."""
        imp = np.zeros(d)
        for i, f in enumerate(self.feature):
            if f < 0:
                continue
            l, r = self.left[i], self.right[i]
            imp[f] += (
                self.n_samples[i] * self.impurity[i]
                - self.n_samples[l] * self.impurity[l]
                - self.n_samples[r] * self.impurity[r]
            )
        total = imp.sum()
        return imp / total if total > 0 else imp

    @property
    def depth(self) -> int:
        def rec(i: int) -> int:
            if self.left[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))

        return rec(0)

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeArrays":
        t = cls(**{k: list(v) for k, v in d.items()})
        t.threshold = [math.nan if v is None else float(v) for v in t.threshold]
        return t


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeArrays:
    """Grow until every leaf is pure or too small to split.

    With ``max_features``, each node draws a random feature order and scans
    it in chunks of that size until a chunk yields a valid split.
    """
    d = X.shape[1]
    tree = TreeArrays()
    root = tree.add(len(y), float(y.sum()))
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        n, pos = len(idx), y[idx].sum()
        if n < min_samples_split or pos == 0 or pos == n:
            continue
        Xn, yn = X[idx], y[idx]
        if max_features is None or max_features >= d:
            split = best_gini_split(Xn, yn, np.arange(d))
        else:
            perm = rng.permutation(d)
            split = None
            for a in range(0, d, max_features):
                split = best_gini_split(Xn, yn, np.sort(perm[a : a + max_features]))
                if split is not None:
                    break
        if split is None:
            continue
        go_left = Xn[:, split.feature] <= split.threshold
        li, ri = idx[go_left], idx[~go_left]
        tree.feature[node] = split.feature
        tree.threshold[node] = split.threshold
        l = tree.add(len(li), float(y[li].sum()))
        r = tree.add(len(ri), float(y[ri].sum()))
        tree.left[node], tree.right[node] = l, r
        # right pushed first so the left subtree is expanded first
        stack.append((r, ri))
        stack.append((l, li))
    return tree


@dataclass(eq=False)
class DTreeModel(Model):
    kind = "dtree"
    threshold = 0.5

    columns: tuple[str, ...]
    tree: TreeArrays
    min_samples_split: int = 2

    def score(self, X) -> np.ndarray:
        X = self._check(X)
        return self.tree.leaf_probability()[self.tree.apply(X)]

    @property
    def feature_importances(self) -> np.ndarray:
        return self.tree.importances(len(self.columns))

    def to_dict(self) -> dict:
        d = self.tree.to_dict()
        d["threshold"] = [None if math.isnan(v) else v for v in d["threshold"]]
        return {"tree": d, "min_samples_split": self.min_samples_split}

    @classmethod
    def from_dict(cls, columns, d: dict) -> "DTreeModel":
        return cls(tuple(columns), TreeArrays.from_dict(d["tree"]), int(d["min_samples_split"]))


def train_dtree(X, y, columns=None, min_samples_split: int = 2) -> DTreeModel:
    X, y = as_training_data(X, y)
    X, y = canonical_rows(X, y)
    columns = tuple(columns) if columns is not None else default_columns(X.shape[1])
    return DTreeModel(columns, grow_tree(X, y, min_samples_split), min_samples_split)


@dataclass(eq=False)
class RandomForest:
    trees: list[TreeArrays]
    n_features: int

    def score(self, X: np.ndarray) -> np.ndarray:
        return np.mean([t.leaf_probability()[t.apply(X)] for t in self.trees], axis=0)

    @property
    def feature_importances(self) -> np.ndarray:
        """Mean over trees of each tree's normalized Gini importance."""
        return np.mean([t.importances(self.n_features) for t in self.trees], axis=0)


def train_forest(X, y, n_trees: int = 100, seed: int = 0, max_features: int | None = None) -> RandomForest:
    """Bootstrap forest; tree ``i`` draws from its own stream seeded by (seed, i)."""
    X, y = as_training_data(X, y)
    X, y = canonical_rows(X, y)
    n, d = X.shape
    k = max_features if max_features is not None else max(1, math.ceil(math.sqrt(d)))
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, i])
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], 2, k, rng))
    return RandomForest(trees, d)


def dtree_export(model: DTreeModel, header: str = "") -> tuple[str, list[tuple[str, float]]]:
    """Graphviz DOT text of the tree and (feature, importance) pairs.

    Thresholds and impurities are printed to 4 decimals; importances are
    normalized to sum to 1 (all zero for a single-leaf tree).
    """
    t = model.tree
    lines = []
    if header:
        lines += [f"// {h}" for h in header.splitlines()]
    lines += ["digraph Tree {", 'node [shape=box, fontname="helvetica"] ;']
    for i in range(len(t.feature)):
        n = t.n_samples[i]
        counts = f"[{n - int(round(t.n_pos[i]))}, {int(round(t.n_pos[i]))}]"
        stats = f"gini = {t.impurity[i]:.4f}\\nsamples = {n}\\nvalue = {counts}"
        if t.left[i] >= 0:
            label = f"{model.columns[t.feature[i]]} <= {t.threshold[i]:.4f}\\n{stats}"
        else:
            cls = "expert" if t.n_pos[i] * 2 > n else "novice"
            label = f"{stats}\\nclass = {cls}"
        lines.append(f'{i} [label="{label}"] ;')
        if t.left[i] >= 0:
            lines.append(f'{i} -> {t.left[i]} [headlabel="True"] ;')
            lines.append(f'{i} -> {t.right[i]} [headlabel="False"] ;')
    lines.append("}")
    imp = model.feature_importances
    table = [(c, float(v)) for c, v in zip(model.columns, imp)]
    return "\n".join(lines) + "\n", table
