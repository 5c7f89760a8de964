import itertools
import math

import numpy as np
import pytest

from skyselect.errors import ConfigError, DataError
from skyselect.models import (
    MODEL_KINDS,
    dtree_export,
    load_model,
    model_from_json,
    model_to_json,
    save_model,
    train_dtree,
    train_forest,
    train_model,
)
from skyselect.models._base import Standardizer, canonical_rows
from skyselect.models.logreg import fit_logreg, logreg_gradient, logreg_objective
from skyselect.models.svm import dual_objective, kkt_residuals, linear_kernel, rbf_kernel, smo, train_svm
from skyselect.models.tree import best_gini_split, gini


def random_data(seed, n=30, d=4, shift=1.0):
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * (n // 2))
    X = rng.normal(size=(n, d)) + shift * y[:, None] * np.linspace(1, 0.2, d)
    return X, y


# ------------------------------------------------------------------ SMO


def grid_minimum(K, ys, C, step):
    """Brute force over alpha_1..3 on a grid; alpha_4 closes the equality constraint."""
    g = np.arange(0.0, C + 1e-12, step)
    a1, a2, a3 = (v.ravel() for v in np.meshgrid(g, g, g, indexing="ij"))
    A = np.column_stack([a1, a2, a3, np.zeros_like(a1)])
    A[:, 3] = -ys[3] * (A[:, :3] @ ys[:3])
    A = A[(A[:, 3] >= -1e-12) & (A[:, 3] <= C + 1e-12)]
    V = A * ys
    obj = 0.5 * np.einsum("ij,jk,ik->i", V, K, V) - A.sum(axis=1)
    return A[np.argmin(obj)], float(obj.min())


def refined_grid_minimum(K, ys, C):
    """Coarse grid, then a fine grid in a box around the coarse optimum."""
    best, coarse = grid_minimum(K, ys, C, C / 40)
    half = C / 20
    fine = np.linspace(0.0, 1.0, 81)
    axes = [max(0.0, best[i] - half) + fine * (min(C, best[i] + half) - max(0.0, best[i] - half)) for i in range(3)]
    a1, a2, a3 = (v.ravel() for v in np.meshgrid(*axes, indexing="ij"))
    A = np.column_stack([a1, a2, a3, np.zeros_like(a1)])
    A[:, 3] = -ys[3] * (A[:, :3] @ ys[:3])
    A = A[(A[:, 3] >= -1e-12) & (A[:, 3] <= C + 1e-12)]
    V = A * ys
    obj = 0.5 * np.einsum("ij,jk,ik->i", V, K, V) - A.sum(axis=1)
    return min(float(obj.min()), coarse)


def four_point_sets():
    rng = np.random.default_rng(21)
    labels = [np.array([1.0, 1.0, -1.0, -1.0]), np.array([1.0, -1.0, -1.0, -1.0]), np.array([1.0, -1.0, 1.0, -1.0])]
    for i in range(12):
        X = rng.normal(size=(4, 2))
        ys = labels[i % 3]
        K = linear_kernel(X, X) if i % 2 else rbf_kernel(X, X, 0.5)
        yield K, ys, [0.5, 1.0, 4.0][i % 3]


@pytest.mark.parametrize("case", list(range(12)))
def test_smo_matches_brute_force_grid(case):
    K, ys, C = list(four_point_sets())[case]
    res = smo(K, ys, C=C, tol=1e-6)
    oracle = refined_grid_minimum(K, ys, C)
    assert abs(res.objective - oracle) <= 1e-3
    assert res.objective == pytest.approx(dual_objective(res.alpha, K, ys))


def test_hard_margin_closed_form():
    # margin 2 between x = -1 and x = +1: w = (1, 0), b = 0, sum(alpha) = ||w||^2 = 1
    X = np.array([[-1.0, 1.0], [-1.0, -1.0], [1.0, 1.0], [1.0, -1.0]])
    ys = np.array([-1.0, -1.0, 1.0, 1.0])
    res = smo(linear_kernel(X, X), ys, C=10.0, tol=1e-9)
    w = (res.alpha * ys) @ X
    assert w == pytest.approx([1.0, 0.0], abs=1e-6)
    assert res.b == pytest.approx(0.0, abs=1e-6)
    assert res.objective == pytest.approx(-0.5, abs=1e-6)


@pytest.mark.parametrize("seed", range(8))
def test_smo_kkt_and_equality(seed):
    X, y = random_data(seed, n=24, d=3, shift=0.8)
    ys = np.where(y == 1, 1.0, -1.0)
    K = rbf_kernel(X, X, 0.3)
    res = smo(K, ys, C=1.0, tol=1e-3)
    f = K @ (res.alpha * ys) + res.b
    assert kkt_residuals(res.alpha, ys, f, 1.0).max() <= 1e-3 + 1e-9
    assert abs(float(res.alpha @ ys)) <= 1e-6
    assert np.all((res.alpha >= 0) & (res.alpha <= 1.0))


def test_separable_training_accuracy():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(-3, 0.5, (15, 2)), rng.normal(3, 0.5, (15, 2))])
    y = np.repeat([0, 1], 15)
    for kernel in ("rbf", "linear"):
        m = train_svm(X, y, kernel=kernel)
        assert (m.predict(X) == y).all()


def test_symmetric_pair_bisector():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [2.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]])
    y = np.array([0, 0, 1, 1, 0, 1])
    for kernel in ("linear", "rbf"):
        m = train_svm(X, y, kernel=kernel, tol=1e-8)
        assert m.b == pytest.approx(0.0, abs=1e-6)
        mid = np.array([[1.0, 0.0], [1.0, 0.5], [1.0, 1.0]])
        assert m.score(mid) == pytest.approx(0.0, abs=1e-6)


def test_bound_support_vector_on_correct_side_keeps_its_label():
    x = np.array([-2.0, -1.0, -0.3, 0.2, 0.0, 1.0, 2.0, -0.1])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    m = train_svm(x[:, None], y, kernel="linear", C=0.1, canonical=False, tol=1e-8)
    ys = np.where(y == 1, 1.0, -1.0)
    f = m.score(x[:, None])
    at_bound = (m.alpha >= 0.1 - 1e-12) & (ys * f > 0)
    assert at_bound.any()
    assert (m.predict(x[:, None])[at_bound] == y[at_bound]).all()


def test_svm_single_class_rejected():
    with pytest.raises(DataError):
        train_svm(np.zeros((3, 2)), np.ones(3, dtype=int))


# ------------------------------------------------------------------ logistic regression


@pytest.mark.parametrize("seed", range(20))
def test_logreg_gradient_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    n, d = int(rng.integers(5, 31)), int(rng.integers(1, 11))
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, n).astype(float)
    theta = rng.normal(scale=0.5, size=d + 1)
    C = float(rng.uniform(0.1, 3.0))
    g = logreg_gradient(theta, X, y, C)
    h = 1e-6
    fd = np.array([
        (logreg_objective(theta + h * e, X, y, C) - logreg_objective(theta - h * e, X, y, C)) / (2 * h)
        for e in np.eye(d + 1)
    ])
    assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-5


def test_logreg_zero_weights_half():
    X, y = random_data(0, n=10, d=3)
    m = train_model("lr", X, y, max_iter=0)
    assert np.all(m.w == 0)
    assert m.score(X) == pytest.approx(0.5)


def test_logreg_converges_to_stationary_point():
    X, y = random_data(4, n=30, d=3)
    theta, it, gn = fit_logreg(Standardizer.fit(X).transform(X), y.astype(float), tol=1e-8, max_iter=5000)
    assert gn < 1e-8 and it < 5000


# ------------------------------------------------------------------ KNN


def test_knn_k1_returns_training_label():
    X, y = random_data(3, n=20, d=3)
    m = train_model("knn", X, y, k=1)
    assert (m.predict(X) == y).all()


def test_knn_tie_at_kth_distance_goes_to_novice():
    m = train_model("knn", np.array([[-1.0], [1.0]]), np.array([1, 0]), k=1)
    assert m.score(np.array([[0.0]]))[0] == 0.0


# ------------------------------------------------------------------ trees


def test_gini_values():
    assert gini(0, 4) == 0.0
    assert gini(2, 4) == 0.5
    assert gini(1, 4) == pytest.approx(0.375)


def test_pure_split_found():
    X = np.array([[3.0, 0.1], [1.0, 0.2], [4.0, 0.3], [2.0, 0.4]])
    y = np.array([1, 0, 1, 0])
    s = best_gini_split(X, y, np.arange(2))
    assert (s.feature, s.threshold, s.weighted_impurity) == (0, 2.5, 0.0)
    m = train_dtree(X, y)
    assert m.tree.depth == 1
    assert (m.predict(X) == y).all()


def test_split_tie_goes_to_lower_feature_then_threshold():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([0, 0, 1, 1])
    s = best_gini_split(X, y, np.arange(2))
    assert (s.feature, s.threshold) == (0, 2.5)


def test_constant_features_give_single_leaf():
    m = train_dtree(np.ones((4, 2)), np.array([0, 1, 0, 1]))
    assert len(m.tree.feature) == 1
    assert m.score(np.ones((1, 2)))[0] == 0.5
    text, imp = dtree_export(m)
    assert [v for _, v in imp] == [0.0, 0.0]
    assert text.startswith("digraph Tree {")


def test_dtree_export_format():
    X = np.array([[3.0, 0.1], [1.0, 0.2], [4.0, 0.3], [2.0, 0.4]])
    m = train_dtree(X, np.array([1, 0, 1, 0]), columns=("a", "b"))
    text, imp = dtree_export(m, header="seed 7")
    assert text.splitlines()[0] == "// seed 7"
    assert "a <= 2.5000" in text
    assert imp == [("a", 1.0), ("b", 0.0)]


def test_forest_deterministic_and_label_feature_first():
    X, y = random_data(5, n=30, d=4, shift=0.0)
    X[:, 2] = y + 0.01 * np.arange(30) / 30
    a = train_forest(X, y, n_trees=30, seed=3)
    b = train_forest(X, y, n_trees=30, seed=3)
    assert np.array_equal(a.feature_importances, b.feature_importances)
    assert int(np.argmax(a.feature_importances)) == 2
    assert a.feature_importances.sum() == pytest.approx(1.0)


# ------------------------------------------------------------------ GBM


def test_gbm_small_sample_is_intercept_only():
    X, y = random_data(6, n=10, d=2)
    m = train_model("lgbm", X, y)
    assert m.trees == []
    assert m.score(X) == pytest.approx(np.full(10, 0.5))
    y2 = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    assert train_model("lgbm", X, y2).score(X[:1])[0] == pytest.approx(0.3)


def test_gbm_learns_separable_data():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 3))
    y = (X[:, 1] > 0).astype(int)
    m = train_model("lgbm", X, y)
    assert (m.predict(X) == y).mean() == 1.0


# ------------------------------------------------------------------ shared behaviour


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_row_order_invariance(kind):
    X, y = random_data(8, n=30, d=3)
    perm = np.random.default_rng(1).permutation(30)
    a = train_model(kind, X, y)
    b = train_model(kind, X[perm], y[perm])
    Xt = np.random.default_rng(2).normal(size=(10, 3))
    assert np.array_equal(a.score(Xt), b.score(Xt))


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_label_flip_flips_predictions(kind):
    X, y = random_data(9, n=60, d=3)
    params = {"tol": 1e-8, "max_iter": 100000} if kind in ("svm", "lr") else {}
    a = train_model(kind, X, y, **params)
    b = train_model(kind, X, 1 - y, **params)
    Xt = np.random.default_rng(3).normal(size=(25, 3)) + 0.5
    sa, sb = a.score(Xt), b.score(Xt)
    if kind == "svm":
        assert sb == pytest.approx(-sa, abs=1e-4)
    else:
        assert sb == pytest.approx(1 - sa, abs=1e-6)
    clear = np.abs(sa - a.threshold) > 1e-3
    assert clear.sum() > 20
    assert (a.predict(Xt)[clear] == 1 - b.predict(Xt)[clear]).all()


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_save_load_round_trip(kind, tmp_path):
    X, y = random_data(10, n=40, d=3)
    m = train_model(kind, X, y, columns=("a", "b", "c"))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back.kind == kind and back.columns == ("a", "b", "c")
    assert np.array_equal(back.score(X), m.score(X))
    assert model_to_json(back) == model_to_json(m)


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_column_count_mismatch(kind):
    X, y = random_data(11, n=20, d=3)
    m = train_model(kind, X, y)
    with pytest.raises(ConfigError):
        m.score(np.zeros((2, 4)))
    with pytest.raises(ConfigError):
        m.check_columns(("x0", "x2", "x1"))


def test_unknown_kind_and_bad_json():
    with pytest.raises(ConfigError):
        train_model("rf", np.zeros((2, 1)), np.array([0, 1]))
    with pytest.raises(DataError):
        model_from_json("{not json")
    with pytest.raises(DataError):
        model_from_json('{"kind": "svm", "columns": ["a"], "params": {}}')


def test_canonical_rows_sorted():
    X = np.array([[2.0, 1.0], [1.0, 5.0], [1.0, 2.0]])
    Xc, yc = canonical_rows(X, np.array([0, 1, 0]))
    assert Xc.tolist() == [[1.0, 2.0], [1.0, 5.0], [2.0, 1.0]]
    assert yc.tolist() == [0, 1, 0]


def test_standardizer_population_sd_and_constant_column():
    X = np.array([[1.0, 3.0], [3.0, 3.0]])
    s = Standardizer.fit(X)
    assert s.transform(X).tolist() == [[-1.0, 0.0], [1.0, 0.0]]
    assert all(math.isfinite(v) for v in s.scale)


def test_predictions_are_binary():
    X, y = random_data(12, n=20, d=2)
    for kind in MODEL_KINDS:
        p = train_model(kind, X, y).predict(X)
        assert set(np.unique(p)) <= {0, 1}
        assert p.dtype.kind == "i"


def test_all_combinations_of_kind_and_label_encoding():
    X, y = random_data(13, n=20, d=2)
    for kind, yy in itertools.product(MODEL_KINDS, (y, y.astype(bool), y.astype(float))):
        train_model(kind, X, yy)
