"""
How group thresholds are chosen
===============================

A hand-sized example: one group the scorer separates perfectly, one where
it only partly ranks them. Equalized odds forces both groups onto a
common (fpr, tpr) point, which must sit under the weaker group's ROC hull.
"""

import numpy as np

from pilotfair.mitigate import (apply_policy, expected_rates, fit_demographic_parity,
                                fit_equalized_odds, operating_points)

scores = np.array([0.1, 0.2, 0.8, 0.9, 0.3, 0.4, 0.6, 0.7])
labels = np.array([0, 0, 1, 1, 1, 0, 1, 1])
groups = np.array(["female"] * 4 + ["male"] * 4)

# rates of the rule score > t, for t in {-inf} and each distinct score
for g, op in operating_points(scores, labels, groups).items():
    print(g)
    for t, sr, tpr, fpr in zip(op.thresholds, op.selection_rate, op.tpr, op.fpr):
        print(f"  t={t:>5}  selection {sr:.2f}  tpr {tpr:.2f}  fpr {fpr:.2f}")

eo = fit_equalized_odds(scores, labels, groups)
print("\nequalized-odds target (fpr, tpr):", tuple(round(v, 3) for v in eo.target))
for g, rule in eo.rules.items():
    print(f"  {g}: {rule}")
print("expected rates:", {g: {k: round(v, 3) for k, v in r.items()}
                          for g, r in expected_rates(eo, scores, labels, groups).items()})

dp = fit_demographic_parity(scores, labels, groups)
print("\ncommon selection rate:", dp.target[0])

# realized predictions are random; averaged over many seeds they hit the target
draws = np.mean([apply_policy(dp, scores, groups, s) for s in range(5000)], axis=0)
print("mean prediction per row:", draws.round(2))
