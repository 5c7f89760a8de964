"""The five binary classifiers and a kind-keyed registry for them.

Labels are 1 = expert, 0 = novice. Every model exposes ``score`` (raw
decision value) and ``predict`` (score thresholded at the model's natural
boundary: 0 for the SVM margin, 0.5 for probability-like scores).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigError, DataError
from ._base import Model, Standardizer, sigmoid
from .gbm import GbmModel, train_gbm
from .knn import KnnModel, train_knn
from .logreg import LogRegModel, train_logreg
from .svm import SvmModel, train_svm
from .tree import DTreeModel, RandomForest, dtree_export, train_dtree, train_forest

MODEL_KINDS: tuple[str, ...] = ("svm", "knn", "lr", "lgbm", "dtree")

# defaults shared by every call site
DEFAULTS: dict[str, dict] = {
    "svm": {"C": 1.0, "kernel": "rbf", "tol": 1e-3},
    "knn": {"k": 5},
    "lr": {"C": 1.0, "tol": 1e-4, "max_iter": 1000},
    "lgbm": {"n_rounds": 100, "learning_rate": 0.1, "num_leaves": 31, "min_data_in_leaf": 20},
    "dtree": {"min_samples_split": 2},
}

_TRAINERS: dict[str, Callable[..., Model]] = {
    "svm": train_svm,
    "knn": train_knn,
    "lr": train_logreg,
    "lgbm": train_gbm,
    "dtree": train_dtree,
}
_CLASSES = {"svm": SvmModel, "knn": KnnModel, "lr": LogRegModel, "lgbm": GbmModel, "dtree": DTreeModel}


def check_kind(kind: str) -> str:
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model {kind!r}; choose from {list(MODEL_KINDS)}")
    return kind


def train_model(kind: str, X, y, columns=None, **params) -> Model:
    check_kind(kind)
    return _TRAINERS[kind](X, y, columns, **{**DEFAULTS[kind], **params})


def predict_score(model: Model, X) -> np.ndarray:
    return model.score(X)


def predict_label(model: Model, X, threshold: float | None = None) -> np.ndarray:
    return model.predict(X, threshold)


def model_to_json(model: Model) -> str:
    return json.dumps(
        {"kind": model.kind, "columns": list(model.columns), "params": model.to_dict()},
        indent=1,
        sort_keys=True,
    )


def model_from_json(text: str) -> Model:
    try:
        d = json.loads(text)
        kind = d["kind"]
        cls = _CLASSES[check_kind(kind)]
        return cls.from_dict(d["columns"], d["params"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc}") from None


def save_model(model: Model, dest: str | Path) -> None:
    Path(dest).write_text(model_to_json(model) + "\n")


def load_model(source: str | Path) -> Model:
    try:
        return model_from_json(Path(source).read_text())
    except DataError as exc:
        raise DataError(f"{source}: {exc}") from None


__all__ = [
    "MODEL_KINDS",
    "DEFAULTS",
    "Model",
    "Standardizer",
    "sigmoid",
    "SvmModel",
    "KnnModel",
    "LogRegModel",
    "GbmModel",
    "DTreeModel",
    "RandomForest",
    "train_model",
    "train_svm",
    "train_knn",
    "train_logreg",
    "train_gbm",
    "train_dtree",
    "train_forest",
    "dtree_export",
    "predict_score",
    "predict_label",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
    "check_kind",
]
