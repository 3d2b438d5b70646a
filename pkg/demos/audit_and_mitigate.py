"""
Auditing one tree for sex bias, then post-processing it
=======================================================

A synthetic cohort with the same cell counts as the pilot study is split
once, a depth-3 tree is fit, and its test predictions are audited. Group
thresholds are then fit on the training scores under each constraint.
"""

import numpy as np

from pilotfair.dataset import SEX_NAMES, balance_classes, stratified_split
from pilotfair.fairness import audit
from pilotfair.mitigate import apply_policy, fit_policy
from pilotfair.stats import format_percent, percent_improvement
from pilotfair.synth import CohortSpec, generate
from pilotfair.tree import TreeParams, fit

# 28 pilots (9 female) and 20 non-pilots (14 female); female scores shifted down
data = generate(CohortSpec.sex_confounded(), rng_seed=4)
print(f"{len(data)} rows, {int(data.labels.sum())} pilots")

# keep 20 pilots so the classes are balanced, then hold out 30%
balanced = balance_classes(data, 20, rng_seed=4)
train, test = stratified_split(balanced, 0.3, rng_seed=4)

model = fit(train, TreeParams("gini", max_depth=3, min_samples_leaf=2, min_samples_split=2))
print(f"tree depth {model.depth()}, {len(model.leaves())} leaves")

train_scores = model.predict_scores(train.features)
test_scores = model.predict_scores(test.features)

before = audit(test.labels, (test_scores > 0.5).astype(int), test.groups, SEX_NAMES)
print("selection rate before:",
      {g: format_percent(100 * v) for g, v in before.selection_rate.items()})

# one policy per constraint; randomized thresholds need a seed to replay
for constraint, metric in (("demographic_parity", "demographic_parity_difference"),
                           ("equalized_odds", "equalized_odds_difference")):
    policy = fit_policy(constraint, train_scores, train.labels, train.groups)
    pred = apply_policy(policy, test_scores, test.groups, rng_seed=4)
    after = audit(test.labels, pred, test.groups, SEX_NAMES)
    b, a = getattr(before, metric), getattr(after, metric)
    imp = format_percent(percent_improvement(b, a)) if b else "n/a"
    print(f"{metric}: {format_percent(100 * b)} -> {format_percent(100 * a)} ({imp} change)")
    print(f"  accuracy {before.accuracy:.2f} -> {after.accuracy:.2f}")

# a single split is noisy; see repeated_trials.py for the averaged version
print("test rows per sex:", np.bincount(test.groups))
