"""Exhaustive grid search over tree hyper-parameters with stratified k-fold CV."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, k_fold_indices
from .tree import TreeParams, fit

CV_TABLE_HEADER = ("criterion", "max_depth", "min_samples_leaf", "min_samples_split", "mean_accuracy")


@dataclass(frozen=True)
class GridSpec:
    criteria: tuple[str, ...] = ("gini", "entropy")
    max_depth_values: tuple[int, ...] = tuple(range(3, 16))
    min_samples_leaf_values: tuple[int, ...] = (2, 3, 4, 5)
    min_samples_split_values: tuple[int, ...] = (2, 3, 4, 5)
    k: int = 7

    def __post_init__(self):
        for name in ("criteria", "max_depth_values", "min_samples_leaf_values", "min_samples_split_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if self.k < 2:
            raise ValueError("k must be >= 2")

    def points(self) -> list[TreeParams]:
        return [TreeParams(c, d, l, s) for c, d, l, s in itertools.product(
            self.criteria, self.max_depth_values,
            self.min_samples_leaf_values, self.min_samples_split_values)]

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()})


def grid_search_cv(data: Dataset, grid: GridSpec = GridSpec(), rng_seed: int = 0
                   ) -> tuple[TreeParams, list[tuple[TreeParams, float]]]:
    """Mean validation accuracy (threshold 0.5) for every grid point.

    One fold partition is shared by all grid points. The best point is the
    first maximum in enumeration order.
    """
    folds = [(data.subset(tr), data.subset(va))
             for tr, va in k_fold_indices(data.labels, grid.k, rng_seed)]
    table = []
    for params in grid.points():
        accs = []
        for train, val in folds:
            model = fit(train, params)
            pred = model.predict_scores(val.features) > 0.5
            accs.append(np.mean(pred == val.labels))
        table.append((params, float(np.mean(accs))))
    best_params, best_acc = table[0]
    for params, acc in table[1:]:
        if acc > best_acc + 1e-12:
            best_params, best_acc = params, acc
    return best_params, table


def cv_table_csv(table: list[tuple[TreeParams, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CV_TABLE_HEADER)
    for p, acc in table:
        w.writerow([p.criterion, p.max_depth, p.min_samples_leaf, p.min_samples_split, repr(acc)])
    return buf.getvalue()
