import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pilotfair.tree import (DecisionTree, TreeParams, accuracy, fit, impurity, predict_label,
                            predict_score)

from conftest import make_dataset

XOR_X = [[0, 0], [0, 1], [1, 0], [1, 1]] * 2
XOR_Y = [0, 1, 1, 0] * 2
LOOSE = dict(min_samples_leaf=1, min_samples_split=2)


@pytest.mark.parametrize("counts,criterion,expected", [
    ((5, 5), "gini", 0.5),
    ((10, 0), "gini", 0.0),
    ((10, 0), "entropy", 0.0),
    ((0, 7), "entropy", 0.0),
    ((2, 6), "gini", 0.375),
    ((5, 5), "entropy", 1.0),
    ((2, 6), "entropy", -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))),
])
def test_impurity_examples(counts, criterion, expected):
    assert impurity(counts, criterion) == pytest.approx(expected, abs=1e-15)


def test_impurity_requires_rows():
    with pytest.raises(ValueError):
        impurity((0, 0))


def test_xor_depth_two_is_perfect():
    data = make_dataset(XOR_X, XOR_Y)
    model = fit(data, TreeParams(max_depth=2, **LOOSE))
    assert accuracy(model, data) == 1.0
    assert model.depth() <= 2


def test_xor_depth_one_cannot_separate():
    data = make_dataset(XOR_X, XOR_Y)
    assert accuracy(fit(data, TreeParams(max_depth=1, **LOOSE)), data) == 0.5


def test_separable_single_split():
    data = make_dataset([[0], [0], [1], [1]], [0, 0, 1, 1])
    model = fit(data, TreeParams(max_depth=3, **LOOSE))
    assert model.n_nodes == 3
    assert model.feature[0] == 0 and model.threshold[0] == 0.5
    assert accuracy(model, data) == 1.0


def test_pure_root_is_single_leaf():
    data = make_dataset([[0], [1], [1]], [1, 1, 1])
    model = fit(data, TreeParams())
    assert model.n_nodes == 1 and model.positive_fraction[0] == 1.0
    row = np.zeros(10)
    assert predict_score(model, row) == 1.0


def test_single_leaf_scores_global_fraction():
    data = make_dataset([[0], [1], [0], [1]], [1, 0, 0, 1])
    model = fit(data, TreeParams(max_depth=1, min_samples_leaf=3, min_samples_split=2))
    assert model.n_nodes == 1
    assert predict_score(model, np.ones(10)) == 0.5


def test_leaf_fraction_and_strict_threshold():
    # x=0: 3 of 4 positive, x=1: all negative
    data = make_dataset([[0]] * 4 + [[1]] * 4, [1, 1, 1, 0, 0, 0, 0, 0])
    model = fit(data, TreeParams(max_depth=1, **LOOSE))
    row = np.zeros(10)
    assert predict_score(model, row) == 0.75
    assert predict_label(model, row, 0.5) == 1
    assert predict_label(model, row, 0.75) == 0
    assert predict_label(model, row, 1.0) == 0


def test_split_ties_prefer_lowest_feature():
    # features 0 and 1 identical: both split equally well
    X = [[0, 0], [0, 0], [1, 1], [1, 1]]
    model = fit(make_dataset(X, [0, 0, 1, 1]), TreeParams(max_depth=1, **LOOSE))
    assert model.feature[0] == 0


def test_empty_training_set():
    with pytest.raises(ValueError):
        fit(make_dataset(np.zeros((0, 1)), []), TreeParams())


def test_params_invariants():
    for bad in (dict(max_depth=0), dict(min_samples_leaf=0), dict(min_samples_split=1),
                dict(criterion="mse")):
        with pytest.raises(ValueError):
            TreeParams(**bad)


def _random_data(seed, n=30):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.integers(0, 2, n), rng.integers(18, 26, n), rng.random((n, 8))])
    y = (X[:, 2] + 0.3 * rng.standard_normal(n) > 0.5).astype(int)
    return make_dataset(X, y)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["gini", "entropy"]), st.integers(1, 6),
       st.integers(1, 4), st.integers(2, 6))
def test_structural_invariants(seed, criterion, depth, leaf, split):
    data = _random_data(seed)
    params = TreeParams(criterion, depth, leaf, split)
    model = fit(data, params)
    assert model.depth() <= depth
    assert all(model.sample_count[i] >= leaf for i in model.leaves())
    assert int(sum(model.sample_count[i] for i in model.leaves())) == len(data)
    scores = model.predict_scores(data.features)
    assert set(np.unique(scores)) <= {float(model.positive_fraction[i]) for i in model.leaves()}
    # determinism and JSON round trip
    again = fit(data, params)
    assert again.to_json() == model.to_json()
    back = DecisionTree.from_json(model.to_json())
    assert np.array_equal(back.predict_scores(data.features), scores)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_training_accuracy_nondecreasing_in_depth(seed):
    data = _random_data(seed)
    accs = [accuracy(fit(data, TreeParams("gini", d, **LOOSE)), data) for d in range(1, 8)]
    assert all(b >= a - 1e-12 for a, b in zip(accs, accs[1:]))


def test_from_json_rejects_malformed():
    model = fit(make_dataset(XOR_X, XOR_Y), TreeParams(max_depth=2, **LOOSE))
    d = model.to_dict()
    d["nodes"][0]["left"] = 0  # cycle back to the root
    import json
    with pytest.raises(ValueError):
        DecisionTree.from_json(json.dumps(d))
