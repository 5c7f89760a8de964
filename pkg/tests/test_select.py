import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyselect.errors import ConfigError, DataError
from skyselect.select import (
    METHODS,
    check_proportion,
    equal_frequency_bins,
    median_impute,
    mic_rank,
    mutual_information,
    rank_features,
    rf_rank,
    select_top,
    svm_rfe_order,
    svm_rfe_rank,
    top_k,
)

from conftest import toy_matrix


def toy(**kw):
    fm = toy_matrix(**kw)
    return fm.X.copy(), fm.y, fm.names


def entropy(codes) -> float:
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def from_table(table):
    """Code vectors whose contingency table is ``table`` (integer counts)."""
    a, b = [], []
    for i, row in enumerate(table):
        for j, c in enumerate(row):
            a += [i] * int(c)
            b += [j] * int(c)
    return np.array(a), np.array(b)


# ------------------------------------------------------------------ mutual information


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.data())
def test_mi_entropy_identity(rows, data):
    table = [[data.draw(st.integers(0, 9)) for _ in range(2)] for _ in range(rows)]
    if sum(map(sum, table)) == 0:
        table[0][0] = 1
    a, b = from_table(table)
    joint = a * 2 + b
    oracle = entropy(a) + entropy(b) - entropy(joint)
    assert mutual_information(a, b) == pytest.approx(oracle, abs=1e-9)


def test_mi_known_table():
    a, b = from_table([[4, 1], [1, 4]])
    expected = 0.8 * math.log(1.6) + 0.2 * math.log(0.4)
    assert mutual_information(a, b) == pytest.approx(expected, abs=1e-12)
    assert round(mutual_information(a, b), 4) == 0.1927


def test_mi_self_is_entropy_and_constant_is_zero():
    x = np.array([0, 1, 1, 2, 2, 2, 3, 4])
    assert mutual_information(x, x) == pytest.approx(entropy(x), abs=1e-12)
    assert mutual_information(x, np.zeros(8, dtype=int)) == 0.0
    y = np.array([0, 1] * 4)
    assert mutual_information(y, y) == pytest.approx(math.log(2), abs=1e-12)


def test_bins_are_equal_frequency():
    codes = equal_frequency_bins(np.arange(20.0))
    assert np.bincount(codes).tolist() == [4, 4, 4, 4, 4]


def test_bins_keep_ties_together():
    x = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    codes = equal_frequency_bins(x)
    assert len(set(codes[:4])) == 1


def test_few_distinct_values_get_own_bins():
    assert equal_frequency_bins(np.array([3.0, 1.0, 3.0, 2.0])).tolist() == [2, 0, 2, 1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=40))
def test_bins_invariant_under_monotone_transform(xs):
    x = np.array(xs, dtype=float)
    assert np.array_equal(equal_frequency_bins(x), equal_frequency_bins(x**3 + 2 * x - 7))


def test_mic_rank_label_copy_first_and_constant_last():
    X, y, names = toy()
    X = np.column_stack([X, np.ones(len(y))])
    r = mic_rank(X, y, names + ("const",))
    assert r.names[0] == "f0"
    assert r.names[-1] == "const" and r.scores[-1] == 0.0


# ------------------------------------------------------------------ SVM-RFE


def test_rfe_label_copy_survives():
    X, y, names = toy(n_per_class=8, n_noise=4, seed=3)
    X[:, 0] = y
    assert svm_rfe_order(X, y)[-1] == 0
    assert svm_rfe_rank(X, y, names).names[0] == "f0"


def test_rfe_duplicate_column_ranks_together():
    X, y, names = toy(n_per_class=8, n_noise=3, seed=4)
    X = np.column_stack([X[:, 0], X])
    r = svm_rfe_rank(X, y, ("dup",) + names)
    assert set(r.names[:2]) == {"dup", "f0"}


def test_rfe_single_feature():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    assert svm_rfe_order(X, np.array([0, 0, 1, 1])) == [0]


def test_rfe_is_a_permutation():
    X, y, _ = toy(n_per_class=6, n_noise=6, seed=5)
    assert sorted(svm_rfe_order(X, y)) == list(range(X.shape[1]))


# ------------------------------------------------------------------ random forest


def test_rf_deterministic_and_informative_first():
    X, y, names = toy(n_per_class=10, n_noise=4, seed=6)
    X[:, 0] = y + 0.01 * np.arange(len(y))
    a, b = rf_rank(X, y, names, n_trees=50, seed=2), rf_rank(X, y, names, n_trees=50, seed=2)
    assert a == b
    assert a.names[0] == "f0"


def test_constant_features_fall_back_to_registry_order():
    y = np.array([0, 1] * 5)
    X = np.ones((10, 4))
    for method in METHODS:
        assert rank_features(method, X, y, ("a", "b", "c", "d")).names == ("a", "b", "c", "d")


@pytest.mark.parametrize("method", METHODS)
def test_rankings_are_permutations(method):
    X, y, names = toy(n_per_class=6, n_noise=5, seed=7)
    r = rank_features(method, X, y, names)
    assert sorted(r.names) == sorted(names)
    assert list(r.scores) == sorted(r.scores, reverse=True)


@pytest.mark.parametrize("method", METHODS)
def test_rankings_ignore_row_order(method):
    X, y, names = toy(n_per_class=6, n_noise=5, seed=8)
    perm = np.random.default_rng(0).permutation(len(y))
    assert rank_features(method, X, y, names).names == rank_features(method, X[perm], y[perm], names).names


def test_ranking_rejects_missing_and_unknown():
    X, y, names = toy()
    X[0, 1] = np.nan
    with pytest.raises(DataError):
        mic_rank(X, y, names)
    with pytest.raises(ConfigError):
        rank_features("anova", np.ones((4, 1)), np.array([0, 1, 0, 1]))


def test_ranked_csv():
    X, y, names = toy(n_noise=1)
    text = mic_rank(X, y, names).to_csv()
    assert text.splitlines()[0] == "rank,name,score"
    assert text.splitlines()[1].startswith("1,f0,")


# ------------------------------------------------------------------ top-k and imputation


@pytest.mark.parametrize(
    "n,p,k",
    [(70, 0.10, 7), (65, 0.65, 42), (63, 0.65, 40), (63, 0.15, 9), (10, 0.01, 1), (100, 0.29, 29), (5, 1.0, 5)],
)
def test_top_k(n, p, k):
    assert top_k(n, p) == k


@pytest.mark.parametrize("p", [0.0, -0.1, 1.01])
def test_bad_proportion(p):
    with pytest.raises(ConfigError):
        check_proportion(p)


def test_select_top_prefix():
    X, y, names = toy(n_noise=9)
    r = mic_rank(X, y, names)
    assert select_top(r, 0.3) == r.names[:3]


def test_median_impute_uses_training_medians():
    train = np.array([[1.0, np.nan], [3.0, np.nan], [np.nan, np.nan], [10.0, np.nan]])
    test = np.array([[np.nan, np.nan]])
    a, b = median_impute(train, test)
    assert a[2, 0] == 3.0 and b[0, 0] == 3.0
    assert (a[:, 1] == 0).all() and b[0, 1] == 0.0
    assert np.isnan(train[2, 0])
