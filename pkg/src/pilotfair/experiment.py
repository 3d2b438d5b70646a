"""Repeated-trial protocol: balance, split, fit, mitigate, audit, then compare.

Each trial draws its own balanced positive subsample and stratified split.
The tree is fit on the training part, unmitigated test predictions use the
0.5 cut, and mitigation policies are fit on training scores and applied to
test scores.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .dataset import Dataset, SEX_NAMES, balance_classes, stratified_split
from .fairness import FairnessReport, audit
from .mitigate import (CONSTRAINTS, DEMOGRAPHIC_PARITY, EQUALIZED_ODDS, apply_policy,
                       expected_rates, fit_policy)
from .model_select import GridSpec, grid_search_cv
from .stats import percent_improvement, t_test_pooled
from .tree import TreeParams, fit

GROUPS = ("female", "male")
DP_METRICS = ("selection_rate", "demographic_parity_ratio", "demographic_parity_difference")
EO_METRICS = ("false_negative_rate", "equalized_odds_ratio", "equalized_odds_difference")
METRICS_BY_CONSTRAINT = {DEMOGRAPHIC_PARITY: DP_METRICS, EQUALIZED_ODDS: EO_METRICS}
TEST_METRIC = {DEMOGRAPHIC_PARITY: "demographic_parity_difference",
               EQUALIZED_ODDS: "equalized_odds_difference"}
_SHORT = {"dp": DEMOGRAPHIC_PARITY, "eo": EQUALIZED_ODDS}


class TrialError(RuntimeError):
    def __init__(self, stage: str, trial: int, cause: Exception):
        self.stage = stage
        self.trial = trial
        super().__init__(f"trial {trial}, stage {stage}: {cause}")


@dataclass
class ExperimentConfig:
    n_trials: int = 30
    positive_target: int = 20
    test_fraction: float = 0.3
    tree_params: TreeParams | str = field(default_factory=TreeParams)
    constraint: str = "both"
    master_seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        self.constraint = _SHORT.get(self.constraint, self.constraint)
        if self.n_trials < 2:
            raise ValueError("n_trials must be >= 2")
        if self.positive_target < 1:
            raise ValueError("positive_target must be >= 1")
        if self.constraint not in CONSTRAINTS + ("both",):
            raise ValueError(f"unknown constraint {self.constraint!r}")
        if isinstance(self.tree_params, str) and self.tree_params != "auto":
            raise ValueError("tree_params must be TreeParams or 'auto'")

    @property
    def constraints(self) -> tuple[str, ...]:
        return CONSTRAINTS if self.constraint == "both" else (self.constraint,)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tree_params"] = self.tree_params if isinstance(self.tree_params, str) else asdict(self.tree_params)
        d["grid"] = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.grid).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        tp = d.get("tree_params")
        if isinstance(tp, dict):
            d["tree_params"] = TreeParams(**tp)
        if isinstance(d.get("grid"), dict):
            d["grid"] = GridSpec.from_dict(d["grid"])
        return cls(**d)


@dataclass
class TrialRecord:
    trial: int
    tree_params: TreeParams
    before: FairnessReport
    after: dict  # constraint -> FairnessReport
    fit_gap: dict  # constraint -> expected gap on the fitting data

    @property
    def accuracy_before(self) -> float:
        return self.before.accuracy

    @property
    def accuracy_after(self) -> dict:
        return {c: r.accuracy for c, r in self.after.items()}


def trial_seeds(master_seed: int, trial_index: int) -> list[int]:
    """Four independent 32-bit seeds (balance, split, dp draw, eo draw) for one trial."""
    ss = np.random.SeedSequence([int(master_seed), int(trial_index)])
    return [int(s) for s in ss.generate_state(4)]


def _stage(name, trial, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TrialError:
        raise
    except Exception as exc:  # attributed and re-raised
        raise TrialError(name, trial, exc) from exc


def _fit_gap(policy, scores, y, groups, constraint) -> float:
    rates = expected_rates(policy, scores, y, groups)
    keys = ("selection_rate",) if constraint == DEMOGRAPHIC_PARITY else ("tpr", "fpr")
    return max(max(r[k] for r in rates.values()) - min(r[k] for r in rates.values()) for k in keys)


def run_trial(data: Dataset, config: ExperimentConfig, trial_index: int,
              tree_params: TreeParams | None = None) -> TrialRecord:
    s_balance, s_split, s_dp, s_eo = trial_seeds(config.master_seed, trial_index)
    apply_seed = {DEMOGRAPHIC_PARITY: s_dp, EQUALIZED_ODDS: s_eo}
    balanced = _stage("balance", trial_index, balance_classes, data, config.positive_target, s_balance)
    train, test = _stage("split", trial_index, stratified_split, balanced, config.test_fraction, s_split)
    if tree_params is None:
        tree_params = config.tree_params
    if tree_params == "auto":
        tree_params = _stage("grid_search", trial_index, grid_search_cv, train, config.grid, s_split)[0]
    model = _stage("fit", trial_index, fit, train, tree_params)

    train_scores = model.predict_scores(train.features)
    test_scores = model.predict_scores(test.features)
    before = _stage("audit_before", trial_index, audit, test.labels,
                    (test_scores > 0.5).astype(int), test.groups, SEX_NAMES)
    after, gaps = {}, {}
    for c in config.constraints:
        policy = _stage(f"mitigate_{c}", trial_index, fit_policy, c, train_scores, train.labels, train.groups)
        gaps[c] = _fit_gap(policy, train_scores, train.labels, train.groups, c)
        pred = apply_policy(policy, test_scores, test.groups, apply_seed[c])
        after[c] = _stage(f"audit_{c}", trial_index, audit, test.labels, pred, test.groups, SEX_NAMES)
    return TrialRecord(trial_index, tree_params, before, after, gaps)


def _metric_values(report: FairnessReport, metric: str) -> dict:
    v = getattr(report, metric)
    return dict(v) if isinstance(v, dict) else {"all": v}


def summarize(records: list[TrialRecord], config: ExperimentConfig) -> dict:
    """Means of per-trial metrics before/after, percent improvements and t-tests."""
    summary = {"version": __version__, "n_trials": len(records), "config": config.to_dict(),
               "tree_params": asdict(records[0].tree_params),
               "accuracy": {"before": float(np.mean([r.accuracy_before for r in records]))}}
    for c in config.constraints:
        metrics = {}
        for metric in METRICS_BY_CONSTRAINT[c]:
            for group in _metric_values(records[0].before, metric):
                b = float(np.mean([_metric_values(r.before, metric)[group] for r in records]))
                a = float(np.mean([_metric_values(r.after[c], metric)[group] for r in records]))
                key = metric if group == "all" else f"{metric}_{group}"
                metrics[key] = {"before": b, "after": a,
                                "percent_improvement": percent_improvement(b, a) if b != 0 else None}
        if c == EQUALIZED_ODDS:
            b = (metrics["false_negative_rate_female"]["before"] + metrics["false_negative_rate_male"]["before"]) / 2
            a = (metrics["false_negative_rate_female"]["after"] + metrics["false_negative_rate_male"]["after"]) / 2
            metrics["false_negative_rate_mean"] = {
                "before": b, "after": a, "percent_improvement": percent_improvement(b, a) if b != 0 else None}
        tm = TEST_METRIC[c]
        tt = t_test_pooled([getattr(r.before, tm) for r in records],
                           [getattr(r.after[c], tm) for r in records])
        summary[c] = {
            "metrics": metrics,
            "t_test": {"metric": tm, **tt.to_dict()},
            "mean_fit_gap": float(np.mean([r.fit_gap[c] for r in records])),
        }
        summary["accuracy"][f"after_{c}"] = float(np.mean([r.after[c].accuracy for r in records]))
    return summary


def run_experiment(data: Dataset, config: ExperimentConfig = ExperimentConfig()
                   ) -> tuple[list[TrialRecord], dict]:
    tree_params = config.tree_params
    records = []
    for i in range(config.n_trials):
        rec = run_trial(data, config, i, tree_params)
        if tree_params == "auto":
            tree_params = rec.tree_params  # searched once, on trial 0
        records.append(rec)
    return records, summarize(records, config)


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def trials_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("trial", "phase", "constraint", "metric", "group", "value"))
    for r in records:
        for metric, group, value in r.before.flat():
            w.writerow((r.trial, "before", "none", metric, group, repr(value)))
        for c, rep in r.after.items():
            for metric, group, value in rep.flat():
                w.writerow((r.trial, "after", c, metric, group, repr(value)))
    return buf.getvalue()


def figure_data_csv(summary: dict) -> str:
    """Bar heights behind the six before/after charts: ``metric,group,phase,value``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("metric", "group", "phase", "value"))
    for c in CONSTRAINTS:
        if c not in summary:
            continue
        for metric in METRICS_BY_CONSTRAINT[c]:
            groups = GROUPS if metric in ("selection_rate", "false_negative_rate") else ("all",)
            for g in groups:
                entry = summary[c]["metrics"][metric if g == "all" else f"{metric}_{g}"]
                for phase in ("before", "after"):
                    w.writerow((metric, g, phase, repr(entry[phase])))
    return buf.getvalue()
