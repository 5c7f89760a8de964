"""Confusion matrix, classification metrics, ROC, and leave-one-out evaluation.

Expert (label 1) is the positive class throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DataError
from .models import MODEL_KINDS, Model, check_kind, train_model
from .registry import FeatureMatrix
from .select import RankedFeatures, check_method, check_proportion, median_impute, rank_features, top_k

log = logging.getLogger(__name__)

Hook = Callable[[str, int, tuple[str, ...]], None]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionMatrix":
        t = np.asarray(y_true, dtype=int)
        p = np.asarray(y_pred, dtype=int)
        return cls(
            int(((t == 1) & (p == 1)).sum()),
            int(((t == 0) & (p == 1)).sum()),
            int(((t == 0) & (p == 0)).sum()),
            int(((t == 1) & (p == 0)).sum()),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    acc: float
    f1: float
    precision: float
    recall: float
    auc: float
    flags: tuple[str, ...] = ()

    NAMES = ("acc", "f1", "auc", "precision", "recall")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.NAMES}


def confusion_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float, tuple[str, ...]]:
    """(acc, f1, precision, recall, flags); undefined ratios are 0 and flagged."""
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    flags = []
    acc = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp == 0:
        precision = 0.0
        flags.append("precision_undefined")
    else:
        precision = cm.tp / (cm.tp + cm.fp)
    if cm.tp + cm.fn == 0:
        recall = 0.0
        flags.append("recall_undefined")
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    if precision + recall == 0:
        f1 = 0.0
        flags.append("f1_undefined")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return acc, f1, precision, recall, tuple(flags)


def _split_scores(y, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=int)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or s.ndim != 1:
        raise DataError("labels and scores must be equal-length vectors")
    pos, neg = s[y == 1], s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("AUC/ROC needs both classes")
    return pos, neg


def auc_fraction(y, scores) -> Fraction:
    """Pairwise AUC as an exact fraction; tied pairs count one half."""
    pos, neg = _split_scores(y, scores)
    neg = np.sort(neg)
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    twice_wins = int((2 * below + (at_or_below - below)).sum())
    return Fraction(twice_wins, 2 * len(pos) * len(neg))


def auc(y, scores) -> float:
    return float(auc_fraction(y, scores))


def roc_counts(y, scores) -> list[tuple[int, int]]:
    """(false positives, true positives) when predicting positive at score >= t,
    for t at each distinct score from high to low, preceded by (0, 0)."""
    pos, neg = _split_scores(y, scores)
    pts = [(0, 0)]
    for t in np.unique(np.concatenate([pos, neg]))[::-1]:
        pts.append((int((neg >= t).sum()), int((pos >= t).sum())))
    return pts


def roc_points(y, scores) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) sorted by fpr; the first point has threshold +inf."""
    pos, neg = _split_scores(y, scores)
    thresholds = [np.inf] + list(np.unique(np.concatenate([pos, neg]))[::-1])
    P, N = len(pos), len(neg)
    return [(fp / N, tp / P, float(t)) for (fp, tp), t in zip(roc_counts(y, scores), thresholds)]


def trapezoid_area(counts: Sequence[tuple[int, int]], n_neg: int, n_pos: int) -> Fraction:
    """Exact trapezoidal area under integer ROC counts."""
    area = Fraction(0)
    for (x0, y0), (x1, y1) in zip(counts, counts[1:]):
        area += Fraction((x1 - x0) * (y0 + y1), 2)
    return area / (n_neg * n_pos)


def metrics(cm: ConfusionMatrix, y, scores) -> Metrics:
    acc, f1, precision, recall, flags = confusion_metrics(cm)
    return Metrics(acc, f1, precision, recall, auc(y, scores), flags)


# ------------------------------------------------------------------ LOOCV


@dataclass
class EvalReport:
    selector: str
    model: str
    proportion: float
    combo: str
    leak_compat: bool
    cm: ConfusionMatrix
    metrics: Metrics
    ids: tuple[str, ...]
    y: np.ndarray
    scores: np.ndarray
    predictions: np.ndarray
    excluded: tuple[str, ...] = ()
    n_features: int = 0
    fold_features: tuple[tuple[str, ...], ...] = field(default=(), repr=False)

    @property
    def roc(self) -> list[tuple[float, float, float]]:
        return roc_points(self.y, self.scores)

    def metrics_row(self) -> dict[str, object]:
        m = self.metrics
        return {
            "combo": self.combo,
            "selector": self.selector,
            "model": self.model,
            "proportion": f"{self.proportion:g}",
            "n_features": self.n_features,
            "acc": repr(m.acc),
            "f1": repr(m.f1),
            "auc": repr(m.auc),
            "precision": repr(m.precision),
            "recall": repr(m.recall),
            "tp": self.cm.tp,
            "fp": self.cm.fp,
            "tn": self.cm.tn,
            "fn": self.cm.fn,
            "flags": ";".join(m.flags),
            "excluded": ";".join(self.excluded),
        }

    def metrics_csv(self) -> str:
        row = self.metrics_row()
        return ",".join(row) + "\n" + ",".join(str(v) for v in row.values()) + "\n"

    def predictions_csv(self) -> str:
        lines = ["participant_id,label,score,predicted"]
        for pid, t, s, p in zip(self.ids, self.y, self.scores, self.predictions):
            lines.append(f"{pid},{int(t)},{float(s)!r},{int(p)}")
        return "\n".join(lines) + "\n"

    def roc_csv(self) -> str:
        lines = ["fpr,tpr,threshold"]
        if len(np.unique(self.y)) == 2:  # header only when the ROC is undefined
            lines += [f"{f!r},{t!r},{th!r}" for f, t, th in self.roc]
        return "\n".join(lines) + "\n"


def fold_ranking(fm: FeatureMatrix, method: str, fold: int, seed: int = 0) -> RankedFeatures | None:
    """Ranking fitted on every row except ``fold`` (all rows when ``fold`` is -1).

    None when those rows are single-class.
    """
    train = np.arange(fm.n) if fold < 0 else np.delete(np.arange(fm.n), fold)
    ytr = fm.y[train]
    if ytr.min() == ytr.max():
        return None
    X, = median_impute(fm.X[train])
    return rank_features(method, X, ytr, fm.names, seed)


def fold_rankings(
    fm: FeatureMatrix,
    method: str,
    leak_compat: bool = False,
    seed: int = 0,
    hook: Hook | None = None,
) -> list[RankedFeatures | None]:
    """Ranking used by each fold (one shared ranking under ``leak_compat``)."""
    check_method(method)
    if leak_compat:
        if hook:
            hook("select", -1, fm.ids)
        return [fold_ranking(fm, method, -1, seed)] * fm.n
    out = []
    for i in range(fm.n):
        if hook:
            hook("select", i, tuple(fm.ids[j] for j in range(fm.n) if j != i))
        out.append(fold_ranking(fm, method, i, seed))
    return out


def loocv(
    fm: FeatureMatrix,
    selector: str | None,
    proportion: float,
    model: str | Callable[..., Model],
    leak_compat: bool = False,
    seed: int = 0,
    rankings: Sequence[RankedFeatures | None] | None = None,
    hook: Hook | None = None,
    combo: str = "",
) -> EvalReport:
    """Leave-one-out evaluation of selector + model on ``fm``.

    Each fold imputes (training-row medians), ranks and trains on the other
    n-1 rows only, then scores the held-out row. With ``leak_compat`` the
    ranking is computed once on all rows. ``selector=None`` uses every
    column. ``model`` is a kind name or a ``trainer(X, y, columns)``.
    ``hook(stage, fold, ids)`` sees the rows each stage was fitted on.
    Folds whose training rows are single-class are excluded and listed.
    """
    if fm.n < 3:
        raise DataError(f"LOOCV needs at least 3 participants, got {fm.n}")
    if fm.y.min() == fm.y.max():
        raise DataError("LOOCV needs both classes")
    check_proportion(proportion)
    if isinstance(model, str):
        kind = check_kind(model)
        trainer = lambda X, y, cols: train_model(kind, X, y, cols)  # noqa: E731
    else:
        kind, trainer = getattr(model, "__name__", "custom"), model
    if selector is not None and rankings is None:
        rankings = fold_rankings(fm, selector, leak_compat, seed, hook)
    k = top_k(len(fm.names), proportion) if selector is not None else len(fm.names)

    keep, scores, preds, excluded, feats = [], [], [], [], []
    for i in range(fm.n):
        train = np.delete(np.arange(fm.n), i)
        ytr = fm.y[train]
        if ytr.min() == ytr.max():
            log.warning("fold %s: training rows are single-class; fold excluded", fm.ids[i])
            excluded.append(fm.ids[i])
            continue
        if selector is not None:
            # the selected set, in matrix column order
            chosen = set(rankings[i].top(k))
            cols = tuple(n for n in fm.names if n in chosen)
        else:
            cols = fm.names
        sub = fm.columns(cols)
        Xtr, Xte = median_impute(sub.X[train], sub.X[i : i + 1])
        train_ids = tuple(fm.ids[j] for j in train)
        if hook:
            hook("impute", i, train_ids)
            hook("train", i, train_ids)
        m = trainer(Xtr, ytr, cols)
        s = float(m.score(Xte)[0])
        keep.append(i)
        scores.append(s)
        preds.append(int(s > m.threshold))
        feats.append(tuple(cols))

    idx = np.array(keep, dtype=int)
    y = fm.y[idx]
    scores_arr = np.array(scores)
    preds_arr = np.array(preds, dtype=int)
    cm = ConfusionMatrix.from_labels(y, preds_arr)
    if len(np.unique(y)) == 2:
        report_metrics = metrics(cm, y, scores_arr)
    else:
        # excluded folds can leave a single pooled class; AUC is then undefined
        acc, f1, precision, recall, flags = confusion_metrics(cm)
        report_metrics = Metrics(acc, f1, precision, recall, float("nan"), flags + ("auc_undefined",))
    return EvalReport(
        selector or "none",
        kind,
        float(proportion),
        combo,
        leak_compat,
        cm,
        report_metrics,
        tuple(fm.ids[j] for j in idx),
        y,
        scores_arr,
        preds_arr,
        tuple(excluded),
        k,
        tuple(feats),
    )


__all__ = [
    "ConfusionMatrix",
    "Metrics",
    "EvalReport",
    "MODEL_KINDS",
    "auc",
    "auc_fraction",
    "confusion_metrics",
    "fold_ranking",
    "fold_rankings",
    "loocv",
    "metrics",
    "roc_counts",
    "roc_points",
    "trapezoid_area",
]
