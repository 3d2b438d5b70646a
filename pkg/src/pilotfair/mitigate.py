"""Post-processing threshold optimizer with per-group randomized thresholds.

A fitted :class:`ThresholdPolicy` assigns each group a rule::

    with prob. p_ignore: predict positive with prob. constant_rate
    otherwise:           threshold = t_low with prob. p, else t_high
                         predict positive iff score > threshold

Demographic parity picks one selection rate shared by all groups; each group
reaches it on the upper concave hull of its (selection rate, correct count)
points. Equalized odds picks one (fpr, tpr) point under every group's ROC
hull; groups whose hull passes above that point mix in the constant rule.
Both targets maximize accuracy on the fitting data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

DEMOGRAPHIC_PARITY = "demographic_parity"
EQUALIZED_ODDS = "equalized_odds"
CONSTRAINTS = (DEMOGRAPHIC_PARITY, EQUALIZED_ODDS)

_TOL = 1e-12


class MitigationError(ValueError):
    pass


@dataclass(frozen=True)
class GroupOperatingPoint:
    """Rates of the rule ``score > t`` for every candidate ``t``, ascending.

    ``thresholds[0]`` is ``-inf`` (accept all); the last entry is the
    largest score (reject all).
    """

    thresholds: np.ndarray
    selection_rate: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    correct: np.ndarray
    n: int
    n_pos: int


@dataclass(frozen=True)
class GroupRule:
    t_low: float
    t_high: float
    p: float = 1.0
    p_ignore: float = 0.0
    constant_rate: float = 0.0

    def __post_init__(self):
        if not self.t_low <= self.t_high:
            raise ValueError(f"t_low {self.t_low} exceeds t_high {self.t_high}")
        for name in ("p", "p_ignore", "constant_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class ThresholdPolicy:
    constraint: str
    rules: dict = field(default_factory=dict)  # group id -> GroupRule
    target: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        def enc(t):
            return "-inf" if t == -np.inf else float(t)
        return {
            "format": "pilotfair.policy/1",
            "constraint": self.constraint,
            "target": [float(v) for v in self.target],
            "groups": {str(g): {"t_low": enc(r.t_low), "t_high": enc(r.t_high), "p": r.p,
                                "p_ignore": r.p_ignore, "constant_rate": r.constant_rate}
                       for g, r in self.rules.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdPolicy":
        if d.get("constraint") not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {d.get('constraint')!r}")
        rules = {g: GroupRule(float(r["t_low"]), float(r["t_high"]), float(r["p"]),
                              float(r.get("p_ignore", 0.0)), float(r.get("constant_rate", 0.0)))
                 for g, r in d["groups"].items()}
        return cls(d["constraint"], rules, tuple(d.get("target", ())))

    @classmethod
    def from_json(cls, text: str) -> "ThresholdPolicy":
        return cls.from_dict(json.loads(text))


def _as_arrays(scores, y_true, groups):
    scores = np.asarray(scores, dtype=float)
    groups = np.asarray(groups)
    y_true = None if y_true is None else np.asarray(y_true).astype(int)
    if len(scores) == 0:
        raise MitigationError("no rows to fit on")
    if len(groups) != len(scores) or (y_true is not None and len(y_true) != len(scores)):
        raise MitigationError("scores, labels and groups must have equal lengths")
    return scores, y_true, groups


def operating_points(scores, y_true, groups) -> dict[Hashable, GroupOperatingPoint]:
    """Per-group rates at every threshold in ``{-inf} ∪ {distinct scores}``."""
    scores, y_true, groups = _as_arrays(scores, y_true, groups)
    out = {}
    for g in sorted(set(groups.tolist())):
        m = groups == g
        s, y = scores[m], y_true[m]
        if len(s) == 0:
            raise MitigationError(f"group {g!r} is empty")
        t = np.concatenate([[-np.inf], np.unique(s)])
        above = s[None, :] > t[:, None]
        n, n_pos = len(s), int(y.sum())
        tp = (above & (y == 1)).sum(axis=1)
        fp = (above & (y == 0)).sum(axis=1)
        tn = (n - n_pos) - fp
        with np.errstate(invalid="ignore", divide="ignore"):
            tpr = tp / n_pos if n_pos else np.full(len(t), np.nan)
            fpr = fp / (n - n_pos) if n - n_pos else np.full(len(t), np.nan)
        out[g] = GroupOperatingPoint(t, above.sum(axis=1) / n, np.asarray(tpr, float),
                                     np.asarray(fpr, float), tp + tn, n, n_pos)
    return out


def _upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull vertices, ascending in x."""
    order = np.lexsort((-y, x))  # by x, best y first among equal x
    keep = []
    last_x = None
    for i in order:
        if x[i] == last_x:
            continue
        last_x = x[i]
        keep.append(i)
    hull: list[int] = []
    for i in keep:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def _hull_at(x, y, hull, x0):
    """Value of the hull at ``x0`` and the bracketing vertices ``(a, b, weight_on_b)``."""
    hx = x[hull]
    k = int(np.searchsorted(hx, x0, side="left"))
    if k < len(hx) and abs(hx[k] - x0) <= _TOL:
        return float(y[hull[k]]), hull[k], hull[k], 1.0
    if k == 0 or k == len(hx):
        raise MitigationError(f"x={x0} outside hull range [{hx[0]}, {hx[-1]}]")
    a, b = hull[k - 1], hull[k]
    w = (x0 - x[a]) / (x[b] - x[a])
    return float((1 - w) * y[a] + w * y[b]), a, b, float(w)


def _rule_from_bracket(op: GroupOperatingPoint, a: int, b: int, w: float) -> GroupRule:
    # vertex b has the larger rate, hence the lower threshold
    if a == b:
        t = float(op.thresholds[a])
        return GroupRule(t, t, 1.0)
    t_low, t_high = float(op.thresholds[b]), float(op.thresholds[a])
    if t_low > t_high:
        t_low, t_high, w = t_high, t_low, 1.0 - w
    return GroupRule(t_low, t_high, min(max(w, 0.0), 1.0))


def fit_demographic_parity(scores, y_true, groups) -> ThresholdPolicy:
    """Equalize selection rates across groups at the accuracy-maximizing common rate."""
    ops = operating_points(scores, y_true, groups)
    hulls = {g: _upper_hull(op.selection_rate, op.correct.astype(float)) for g, op in ops.items()}
    rates = np.unique(np.concatenate([op.selection_rate for op in ops.values()]))
    candidates = np.unique(np.concatenate([rates, (rates[1:] + rates[:-1]) / 2]))
    best, best_val = None, -np.inf
    for s in candidates:
        val = sum(_hull_at(op.selection_rate, op.correct, hulls[g], s)[0] for g, op in ops.items())
        if val > best_val + 1e-9:
            best, best_val = float(s), val
    rules = {}
    for g, op in ops.items():
        _, a, b, w = _hull_at(op.selection_rate, op.correct, hulls[g], best)
        rules[g] = _rule_from_bracket(op, a, b, w)
    return ThresholdPolicy(DEMOGRAPHIC_PARITY, rules, (best,))


def fit_equalized_odds(scores, y_true, groups) -> ThresholdPolicy:
    """Match every group to one (fpr, tpr) point under all groups' ROC hulls.

    The point maximizes fitting accuracy, i.e. minimizes the
    population-weighted error. A group whose hull lies strictly above the
    point mixes its hull point at the same fpr with a constant predictor
    of rate fpr.
    """
    ops = operating_points(scores, y_true, groups)
    for g, op in ops.items():
        if op.n_pos == 0 or op.n_pos == op.n:
            raise MitigationError(f"group {g!r} has only one class; equalized odds undefined")
    hulls = {g: _upper_hull(op.fpr, op.tpr) for g, op in ops.items()}

    xs = np.unique(np.concatenate([op.fpr[hulls[g]] for g, op in ops.items()]))
    crossings = []
    glist = list(ops)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        vals0 = {g: _hull_at(ops[g].fpr, ops[g].tpr, hulls[g], x0)[0] for g in glist}
        vals1 = {g: _hull_at(ops[g].fpr, ops[g].tpr, hulls[g], x1)[0] for g in glist}
        for i, g in enumerate(glist):
            for h in glist[i + 1:]:
                d0, d1 = vals0[g] - vals0[h], vals1[g] - vals1[h]
                if d0 * d1 < 0:
                    crossings.append(x0 + (x1 - x0) * d0 / (d0 - d1))
    candidates = np.unique(np.concatenate([xs, crossings]))

    n_pos = sum(op.n_pos for op in ops.values())
    n_neg = sum(op.n - op.n_pos for op in ops.values())
    best, best_val = None, -np.inf
    for x in candidates:
        y = min(_hull_at(op.fpr, op.tpr, hulls[g], x)[0] for g, op in ops.items())
        val = n_pos * y - n_neg * x
        if val > best_val + 1e-9:
            best, best_val = (float(x), float(y)), val
    x, y = best

    rules = {}
    for g, op in ops.items():
        u, a, b, w = _hull_at(op.fpr, op.tpr, hulls[g], x)
        rule = _rule_from_bracket(op, a, b, w)
        if u - y > _TOL:
            q = (u - y) / (u - x)
            rule = GroupRule(rule.t_low, rule.t_high, rule.p, min(max(q, 0.0), 1.0), x)
        rules[g] = rule
    return ThresholdPolicy(EQUALIZED_ODDS, rules, (x, y))


def fit_policy(constraint: str, scores, y_true, groups) -> ThresholdPolicy:
    if constraint == DEMOGRAPHIC_PARITY:
        return fit_demographic_parity(scores, y_true, groups)
    if constraint == EQUALIZED_ODDS:
        return fit_equalized_odds(scores, y_true, groups)
    raise ValueError(f"unknown constraint {constraint!r}")


def apply_policy(policy: ThresholdPolicy, scores, groups, rng_seed: int) -> np.ndarray:
    """Randomized 0/1 predictions; three uniforms are drawn per row, in row order."""
    scores, _, groups = _as_arrays(scores, None, groups)
    unknown = set(groups.tolist()) - set(policy.rules)
    if unknown:
        raise MitigationError(f"groups not in policy: {sorted(map(str, unknown))}")
    u = np.random.default_rng(rng_seed).random((len(scores), 3))
    pred = np.zeros(len(scores), dtype=int)
    for g, r in policy.rules.items():
        m = groups == g
        if not m.any():
            continue
        t = np.where(u[m, 0] < r.p, r.t_low, r.t_high)
        by_score = scores[m] > t
        by_const = u[m, 2] < r.constant_rate
        pred[m] = np.where(u[m, 1] < r.p_ignore, by_const, by_score)
    return pred


def expected_rates(policy: ThresholdPolicy, scores, y_true, groups) -> dict:
    """Exact expected selection rate, tpr, fpr and correct count per group."""
    scores, y_true, groups = _as_arrays(scores, y_true, groups)
    out = {}
    for g, r in policy.rules.items():
        m = groups == g
        if not m.any():
            continue
        s, y = scores[m], y_true[m]
        prob = (1 - r.p_ignore) * (r.p * (s > r.t_low) + (1 - r.p) * (s > r.t_high)) \
            + r.p_ignore * r.constant_rate
        pos, neg = y == 1, y == 0
        out[g] = {
            "selection_rate": float(prob.mean()),
            "tpr": float(prob[pos].mean()) if pos.any() else float("nan"),
            "fpr": float(prob[neg].mean()) if neg.any() else float("nan"),
            "correct": float(prob[pos].sum() + (1 - prob[neg]).sum()),
        }
    return out


def expected_accuracy(policy: ThresholdPolicy, scores, y_true, groups) -> float:
    rates = expected_rates(policy, scores, y_true, groups)
    return sum(r["correct"] for r in rates.values()) / len(np.asarray(scores))
