from collections import Counter

import numpy as np
import pytest

from pilotfair.dataset import (Dataset, FeatureRow, StratumError, balance_classes, k_folds,
                               stratified_split)
from pilotfair.synth import generate

from conftest import make_dataset


def _study_cohort():
    # 28 pilots + 20 non-pilots, the post-filtering counts
    return generate(rng_seed=3)


def test_balance_to_twenty_pilots():
    data = _study_cohort()
    assert (data.labels == 1).sum() == 28
    out = balance_classes(data, 20, rng_seed=1)
    assert (out.labels == 1).sum() == 20 and (out.labels == 0).sum() == 20


def test_balance_negatives_untouched_and_deterministic():
    data = _study_cohort()
    a, b = balance_classes(data, 20, 5), balance_classes(data, 20, 5)
    assert np.array_equal(a.features, b.features)
    neg = lambda d: sorted(map(tuple, d.features[d.labels == 0]))  # noqa: E731
    assert neg(a) == neg(data)


def test_balance_full_target_keeps_all():
    data = _study_cohort()
    out = balance_classes(data, 28, 0)
    assert np.array_equal(np.sort(out.features, axis=0), np.sort(data.features, axis=0))


def test_balance_too_many():
    with pytest.raises(ValueError):
        balance_classes(_study_cohort(), 29, 0)


def test_stratified_split_sizes_and_partition():
    data = balance_classes(_study_cohort(), 20, 0)
    train, test = stratified_split(data, 0.3, 11)
    assert (len(train), len(test)) == (28, 12)
    rows = lambda d: Counter(map(tuple, np.column_stack([d.features, d.labels])))  # noqa: E731
    assert rows(train) + rows(test) == rows(data)
    # per-stratum counts equal round-half-up(0.3 * count), up to the largest-stratum repair
    for label in (0, 1):
        for sex in (0, 1):
            n = ((data.labels == label) & (data.groups == sex)).sum()
            k = ((test.labels == label) & (test.groups == sex)).sum()
            assert abs(k - 0.3 * n) <= 1.5


def test_stratified_split_deterministic():
    data = _study_cohort()
    a, b = stratified_split(data, 0.3, 4), stratified_split(data, 0.3, 4)
    assert np.array_equal(a[1].features, b[1].features)


def test_stratum_rounding_to_zero_stays_in_train():
    # one row in (label=1, female): 0.3 * 1 rounds to 0
    X = [[0], [1], [1], [1], [0], [0], [0], [1], [1], [1]]
    y = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    train, test = stratified_split(make_dataset(X, y), 0.3, 0)
    assert not ((test.labels == 1) & (test.groups == 0)).any()


def test_stratified_split_empty_stratum():
    with pytest.raises(StratumError, match="female"):
        stratified_split(make_dataset([[1], [1], [0]], [1, 0, 0]), 0.3, 0)


def test_k_folds_sizes_forty_by_seven():
    data = make_dataset(np.zeros((40, 1)), [1] * 20 + [0] * 20)
    folds = k_folds(data, 7, 0)
    assert sorted((len(v) for _, v in folds), reverse=True) == [6, 6, 6, 6, 6, 5, 5]


def test_k_folds_two_on_four():
    data = make_dataset(np.arange(4)[:, None] * 0, [1, 1, 0, 0])
    for _, val in k_folds(data, 2, 0):
        assert sorted(val.labels.tolist()) == [0, 1]


def test_k_folds_partition_and_stratification():
    data = make_dataset(np.arange(37)[:, None] % 2, [1] * 15 + [0] * 22)
    folds = k_folds(data, 7, 9)
    assert sum(len(v) for _, v in folds) == 37
    total_pos = data.labels.sum()
    for tr, va in folds:
        assert len(tr) + len(va) == 37
        expected = total_pos * len(va) / 37
        assert abs(va.labels.sum() - expected) <= 1


def test_k_folds_errors():
    data = make_dataset(np.zeros((3, 1)), [1, 0, 1])
    with pytest.raises(ValueError):
        k_folds(data, 4, 0)
    with pytest.raises(ValueError):
        k_folds(data, 1, 0)


def test_csv_round_trip():
    data = _study_cohort()
    text = data.to_csv()
    assert text.splitlines()[0] == "sex,age,PSS,JSS,MFI,GF,PF,RA,RM,MF,label"
    back = Dataset.from_csv(text)
    assert np.array_equal(back.features, data.features)
    assert back.to_csv() == text


def test_feature_row_validation():
    with pytest.raises(ValueError):
        FeatureRow("female", 20, (1.2,) + (0.5,) * 7, 1)
    assert Dataset.from_rows([FeatureRow("male", 20, (0.5,) * 8, 0)]).groups.tolist() == [1]
