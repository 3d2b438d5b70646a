"""Binary CART classifier with gini/entropy impurity and leaf-fraction scores."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .dataset import Dataset, FeatureRow, FEATURE_NAMES

CRITERIA = ("gini", "entropy")
_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    criterion: str = "gini"
    max_depth: int = 3
    min_samples_leaf: int = 2
    min_samples_split: int = 2

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.max_depth < 1 or self.min_samples_leaf < 1 or self.min_samples_split < 2:
            raise ValueError(f"invalid tree parameters: {self}")


def impurity(class_counts: tuple[int, int], criterion: str = "gini") -> float:
    """Node impurity from ``(negatives, positives)``."""
    neg, pos = class_counts
    n = neg + pos
    if n < 1:
        raise ValueError("impurity needs at least one sample")
    p = np.array([neg, pos], dtype=float) / n
    if criterion == "gini":
        return float(1.0 - np.sum(p ** 2))
    if criterion == "entropy":
        p = p[p > 0]
        return float(-np.sum(p * np.log2(p)) + 0.0)
    raise ValueError(f"unknown criterion {criterion!r}")


def _impurity_vec(pos: np.ndarray, n: np.ndarray, criterion: str) -> np.ndarray:
    p1 = pos / n
    p0 = 1.0 - p1
    if criterion == "gini":
        return 1.0 - p0 ** 2 - p1 ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p0 > 0, p0 * np.log2(p0), 0.0) + np.where(p1 > 0, p1 * np.log2(p1), 0.0))
    return h


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Fitted tree stored as parallel node arrays; node 0 is the root.

    Internal nodes have ``feature >= 0``; leaves have ``feature == -1`` and
    carry ``positive_fraction`` and ``sample_count``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    positive_fraction: np.ndarray
    sample_count: np.ndarray
    params: TreeParams
    root: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def depth(self) -> int:
        def walk(node, d):
            if self.is_leaf(node):
                return d
            return max(walk(self.left[node], d + 1), walk(self.right[node], d + 1))
        return walk(self.root, 0)

    def leaves(self) -> list[int]:
        return [i for i in range(self.n_nodes) if self.is_leaf(i)]

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.full(len(X), self.root)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.positive_fraction[node].astype(float)

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            if self.is_leaf(i):
                nodes.append({"id": i, "positive_fraction": float(self.positive_fraction[i]),
                              "sample_count": int(self.sample_count[i])})
            else:
                nodes.append({"id": i, "feature": int(self.feature[i]),
                              "feature_name": FEATURE_NAMES[int(self.feature[i])],
                              "threshold": float(self.threshold[i]),
                              "left": int(self.left[i]), "right": int(self.right[i]),
                              "sample_count": int(self.sample_count[i])})
        return {"format": "pilotfair.tree/1", "params": asdict(self.params),
                "feature_names": list(FEATURE_NAMES), "root": self.root, "nodes": nodes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        nodes = sorted(d["nodes"], key=lambda n: n["id"])
        if [n["id"] for n in nodes] != list(range(len(nodes))):
            raise ValueError("node ids must be 0..n-1")
        m = len(nodes)
        feature = np.full(m, -1)
        threshold = np.zeros(m)
        left = np.full(m, -1)
        right = np.full(m, -1)
        frac = np.full(m, np.nan)
        count = np.zeros(m, dtype=int)
        for n in nodes:
            i = n["id"]
            count[i] = n.get("sample_count", 0)
            if "feature" in n:
                feature[i], threshold[i] = n["feature"], n["threshold"]
                left[i], right[i] = n["left"], n["right"]
            else:
                frac[i] = n["positive_fraction"]
        tree = cls(feature, threshold, left, right, frac, count, TreeParams(**d["params"]), d.get("root", 0))
        _check_well_formed(tree)
        return tree

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        return cls.from_dict(json.loads(text))


def _check_well_formed(tree: DecisionTree) -> None:
    seen = set()
    stack = [tree.root]
    while stack:
        i = stack.pop()
        if i in seen or not 0 <= i < tree.n_nodes:
            raise ValueError(f"malformed tree at node {i}")
        seen.add(i)
        if not tree.is_leaf(i):
            stack += [int(tree.left[i]), int(tree.right[i])]
    if len(seen) != tree.n_nodes:
        raise ValueError("tree has unreachable nodes")


def _best_split(X, y, criterion, min_leaf):
    n = len(y)
    parent = impurity((n - int(y.sum()), int(y.sum())), criterion)
    best = None  # (gain, feature, threshold)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        cum_pos = np.cumsum(y[order])
        # split after position i-1: left = first i rows
        i = np.arange(1, n)
        ok = (v[i - 1] < v[i]) & (i >= min_leaf) & (n - i >= min_leaf)
        if not ok.any():
            continue
        i = i[ok]
        lp = cum_pos[i - 1]
        rp = cum_pos[-1] - lp
        child = (i * _impurity_vec(lp, i, criterion)
                 + (n - i) * _impurity_vec(rp, n - i, criterion)) / n
        gain = parent - child
        j = int(np.argmax(gain))  # first max = lowest threshold
        if best is None or gain[j] > best[0] + _GAIN_TOL:
            a, b = v[i[j] - 1], v[i[j]]
            t = a + (b - a) / 2.0
            if not a <= t < b:
                t = a
            best = (float(gain[j]), f, float(t))
    return best


def fit(train: Dataset, params: TreeParams = TreeParams()) -> DecisionTree:
    """Grow a tree greedily, choosing the split with the largest impurity decrease.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties go to the lowest feature index, then the lowest threshold. Splits
    with zero decrease are still taken when nothing better exists, so a node
    stops only on depth, size, purity, or the leaf-size constraint.
    """
    if len(train) == 0:
        raise ValueError("cannot fit a tree on an empty training set")
    X, y = train.features, train.labels
    feature, threshold, left, right, frac, count = [], [], [], [], [], []

    def grow(idx, depth):
        node = len(feature)
        feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
        n, pos = len(idx), int(y[idx].sum())
        frac.append(pos / n)
        count.append(n)
        if depth >= params.max_depth or n < params.min_samples_split or pos in (0, n):
            return node
        split = _best_split(X[idx], y[idx], params.criterion, params.min_samples_leaf)
        if split is None:
            return node
        _, f, t = split
        mask = X[idx, f] <= t
        feature[node], threshold[node] = f, t
        frac[node] = np.nan
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return DecisionTree(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                        np.array(frac, dtype=float), np.array(count), params)


def _row_vector(row) -> np.ndarray:
    if isinstance(row, FeatureRow):
        return row.as_vector()
    v = np.asarray(row, dtype=float)
    if v.shape != (len(FEATURE_NAMES),):
        raise ValueError(f"row needs {len(FEATURE_NAMES)} features")
    return v


def predict_score(model: DecisionTree, row) -> float:
    """Positive fraction of the leaf ``row`` lands in (left iff value <= threshold)."""
    return float(model.predict_scores(_row_vector(row)[None, :])[0])


def predict_label(model: DecisionTree, row, threshold: float = 0.5) -> int:
    """1 iff the score is strictly above ``threshold``."""
    return int(predict_score(model, row) > threshold)


def accuracy(model: DecisionTree, data: Dataset, threshold: float = 0.5) -> float:
    pred = (model.predict_scores(data.features) > threshold).astype(int)
    return float(np.mean(pred == data.labels))
