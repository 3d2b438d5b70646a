"""Feature matrices, class balancing and seeded partitioning."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .survey import INSTRUMENTS

FEATURE_NAMES = ("sex", "age") + INSTRUMENTS
SEX_CODES = {"female": 0, "male": 1}
SEX_NAMES = {0: "female", 1: "male"}
CSV_HEADER = FEATURE_NAMES + ("label",)


class StratumError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureRow:
    sex: str
    age: int
    scores: tuple[float, ...]
    label: int  # 1 = pilot, 0 = non-pilot

    def __post_init__(self):
        if self.sex not in SEX_CODES:
            raise ValueError(f"sex must be 'female' or 'male', got {self.sex!r}")
        if len(self.scores) != len(INSTRUMENTS):
            raise ValueError(f"expected {len(INSTRUMENTS)} scores, got {len(self.scores)}")
        if any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise ValueError(f"scores must lie in [0, 1]: {self.scores}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    def as_vector(self) -> np.ndarray:
        return np.array([SEX_CODES[self.sex], self.age, *self.scores], dtype=float)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows as a ``(n, 10)`` float matrix plus a 0/1 label vector.

    Column 0 is sex coded female=0, male=1; it doubles as the group id
    used by the fairness audit.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float).reshape(-1, len(FEATURE_NAMES))
        y = np.asarray(self.labels, dtype=int).reshape(-1)
        if len(X) != len(y):
            raise ValueError("features and labels differ in length")
        if tuple(self.feature_names) != FEATURE_NAMES:
            raise ValueError(f"feature_names must be {FEATURE_NAMES}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def groups(self) -> np.ndarray:
        return self.features[:, 0].astype(int)

    @classmethod
    def from_rows(cls, rows: Iterable[FeatureRow]) -> "Dataset":
        rows = list(rows)
        X = np.array([r.as_vector() for r in rows], dtype=float).reshape(-1, len(FEATURE_NAMES))
        return cls(X, np.array([r.label for r in rows], dtype=int))

    def rows(self) -> list[FeatureRow]:
        return [
            FeatureRow(SEX_NAMES[int(x[0])], int(x[1]), tuple(float(v) for v in x[2:]), int(y))
            for x, y in zip(self.features, self.labels)
        ]

    def subset(self, idx: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for x, y in zip(self.features, self.labels):
            w.writerow(["F" if x[0] == 0 else "M", int(x[1]), *(repr(float(v)) for v in x[2:]), int(y)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        reader = csv.reader(io.StringIO(text))
        header = tuple(h.strip() for h in next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"dataset header must be {','.join(CSV_HEADER)}")
        rows = []
        for rownum, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"row {rownum}: expected {len(CSV_HEADER)} columns")
            sex = {"F": "female", "M": "male"}.get(rec[0].strip().upper())
            if sex is None:
                raise ValueError(f"row {rownum}: sex must be F or M")
            rows.append(FeatureRow(sex, int(rec[1]), tuple(float(v) for v in rec[2:-1]), int(rec[-1])))
        return cls.from_rows(rows)


def balance_classes(data: Dataset, positive_target: int, rng_seed: int) -> Dataset:
    """Keep a random ``positive_target``-sized subset of the positives and every negative."""
    pos = np.flatnonzero(data.labels == 1)
    if positive_target > len(pos):
        raise ValueError(f"positive_target {positive_target} exceeds {len(pos)} available positives")
    if positive_target < 0:
        raise ValueError("positive_target must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(pos, size=positive_target, replace=False)
    keep = np.sort(np.concatenate([chosen, np.flatnonzero(data.labels == 0)]))
    return data.subset(keep)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def _strata(data: Dataset) -> dict[tuple[int, int], np.ndarray]:
    out = {}
    for label in (0, 1):
        for sex in (0, 1):
            out[(label, sex)] = np.flatnonzero((data.labels == label) & (data.groups == sex))
    return out


def stratified_split_indices(data: Dataset, test_fraction: float,
                             rng_seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    strata = _strata(data)
    empty = [k for k, v in strata.items() if len(v) == 0]
    if empty:
        names = ", ".join(f"(label={l}, sex={SEX_NAMES[s]})" for l, s in empty)
        raise StratumError(f"empty strata: {names}")

    keys = list(strata)
    n_test = {k: _round_half_up(test_fraction * len(strata[k])) for k in keys}
    diff = _round_half_up(test_fraction * len(data)) - sum(n_test.values())
    if diff:
        largest = max(keys, key=lambda k: len(strata[k]))
        n_test[largest] = min(max(n_test[largest] + diff, 0), len(strata[largest]))

    rng = np.random.default_rng(rng_seed)
    train, test = [], []
    for k in keys:
        perm = rng.permutation(strata[k])
        test.append(perm[:n_test[k]])
        train.append(perm[n_test[k]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(data: Dataset, test_fraction: float = 0.3,
                     rng_seed: int = 0) -> tuple[Dataset, Dataset]:
    """Split by (label, sex) stratum, sending a rounded ``test_fraction`` of each to test.

    Per-stratum counts are rounded half up; if their sum misses the rounded
    overall test size the largest stratum absorbs the difference.
    """
    train, test = stratified_split_indices(data, test_fraction, rng_seed)
    return data.subset(train), data.subset(test)


def k_fold_indices(labels: np.ndarray, k: int, rng_seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds row count {n}")
    rng = np.random.default_rng(rng_seed)
    # shuffle within each class, then deal round-robin so both fold sizes and
    # per-class counts differ by at most one
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)])
    fold_of = np.empty(n, dtype=int)
    fold_of[order] = np.arange(n) % k
    all_idx = np.arange(n)
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def k_folds(data: Dataset, k: int, rng_seed: int) -> list[tuple[Dataset, Dataset]]:
    """Label-stratified k-fold partition as ``(train, validation)`` pairs."""
    return [(data.subset(tr), data.subset(va)) for tr, va in k_fold_indices(data.labels, k, rng_seed)]
