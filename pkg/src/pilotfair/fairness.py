"""Group confusion counts and the selection-rate / equalized-odds audit metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Hashable, Mapping, Sequence

import numpy as np


class UndefinedRateError(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


GroupConfusion = dict  # group id -> Confusion


def group_confusion(y_true: Sequence[int], y_pred: Sequence[int], groups: Sequence[Hashable],
                    known_groups: Sequence[Hashable] | None = None) -> GroupConfusion:
    """Confusion counts per group, keyed in sorted group order.

    With ``known_groups`` every listed group appears (possibly empty) and any
    other id raises.
    """
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    groups = np.asarray(groups)
    if not (len(y_true) == len(y_pred) == len(groups)):
        raise ValueError("y_true, y_pred and groups must have equal lengths")
    if len(y_true) == 0:
        raise ValueError("need at least one row")
    present = sorted(set(groups.tolist()))
    if known_groups is not None:
        unknown = [g for g in present if g not in set(known_groups)]
        if unknown:
            raise ValueError(f"unknown group ids: {unknown}")
        present = list(known_groups)
    out = {}
    for g in present:
        m = groups == g
        t, p = y_true[m], y_pred[m]
        out[g] = Confusion(
            tp=int(np.sum((t == 1) & (p == 1))), fp=int(np.sum((t == 0) & (p == 1))),
            tn=int(np.sum((t == 0) & (p == 0))), fn=int(np.sum((t == 1) & (p == 0))))
    return out


def selection_rates(conf: GroupConfusion) -> dict:
    """Fraction of each group predicted positive."""
    out = {}
    for g, c in conf.items():
        if c.total == 0:
            raise UndefinedRateError(f"group {g!r} is empty")
        out[g] = (c.tp + c.fp) / c.total
    return out


def _ratio(values) -> float:
    lo, hi = min(values), max(values)
    return 1.0 if hi == 0 else lo / hi


def demographic_parity(conf: GroupConfusion) -> tuple[float, float]:
    """``(min/max, max - min)`` of the group selection rates."""
    if len(conf) < 2:
        raise ValueError("demographic parity needs at least two groups")
    sr = list(selection_rates(conf).values())
    return _ratio(sr), max(sr) - min(sr)


def group_error_rates(conf: GroupConfusion) -> dict:
    """``{group: (tpr, fpr, fnr)}``; raises if a group lacks positives or negatives."""
    out = {}
    for g, c in conf.items():
        if c.tp + c.fn == 0:
            raise UndefinedRateError(f"group {g!r}: tpr/fnr undefined (no actual positives)")
        if c.fp + c.tn == 0:
            raise UndefinedRateError(f"group {g!r}: fpr undefined (no actual negatives)")
        tpr = c.tp / (c.tp + c.fn)
        out[g] = (tpr, c.fp / (c.fp + c.tn), c.fn / (c.tp + c.fn))
    return out


def equalized_odds(conf: GroupConfusion) -> tuple[float, float]:
    """Cross-group equalized-odds ``(ratio, difference)``.

    ratio is the smaller of the TPR min/max and FPR min/max quotients
    (a quotient with zero denominator counts as 1); difference is the
    larger of the TPR and FPR spreads.
    """
    if len(conf) < 2:
        raise ValueError("equalized odds needs at least two groups")
    rates = group_error_rates(conf).values()
    tpr = [r[0] for r in rates]
    fpr = [r[1] for r in rates]
    return (min(_ratio(tpr), _ratio(fpr)),
            max(max(tpr) - min(tpr), max(fpr) - min(fpr)))


@dataclass
class FairnessReport:
    selection_rate: dict = field(default_factory=dict)
    demographic_parity_ratio: float = float("nan")
    demographic_parity_difference: float = float("nan")
    true_positive_rate: dict = field(default_factory=dict)
    false_positive_rate: dict = field(default_factory=dict)
    false_negative_rate: dict = field(default_factory=dict)
    equalized_odds_ratio: float = float("nan")
    equalized_odds_difference: float = float("nan")
    accuracy: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def flat(self) -> list[tuple[str, str, float]]:
        """``(metric, group, value)`` triples; scalar metrics use group ``all``."""
        rows = []
        for name, value in self.to_dict().items():
            if isinstance(value, dict):
                rows += [(name, str(g), float(v)) for g, v in value.items()]
            else:
                rows.append((name, "all", float(value)))
        return rows


def audit(y_true, y_pred, groups, group_names: Mapping | None = None) -> FairnessReport:
    """All six audit metrics plus accuracy for one set of predictions."""
    conf = group_confusion(y_true, y_pred, groups)
    name = (lambda g: group_names.get(g, str(g))) if group_names else str
    sr = selection_rates(conf)
    dp_ratio, dp_diff = demographic_parity(conf)
    err = group_error_rates(conf)
    eo_ratio, eo_diff = equalized_odds(conf)
    return FairnessReport(
        selection_rate={name(g): v for g, v in sr.items()},
        demographic_parity_ratio=dp_ratio,
        demographic_parity_difference=dp_diff,
        true_positive_rate={name(g): r[0] for g, r in err.items()},
        false_positive_rate={name(g): r[1] for g, r in err.items()},
        false_negative_rate={name(g): r[2] for g, r in err.items()},
        equalized_odds_ratio=eo_ratio,
        equalized_odds_difference=eo_diff,
        accuracy=float(np.mean(np.asarray(y_true) == np.asarray(y_pred))),
    )
