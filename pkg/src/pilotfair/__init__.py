"""Sex-bias auditing and threshold-based mitigation for pilot/non-pilot fatigue models."""

__version__ = "0.1.0"

from .dataset import Dataset, FeatureRow, balance_classes, k_folds, stratified_split  # noqa: E402
from .fairness import FairnessReport, audit  # noqa: E402
from .mitigate import ThresholdPolicy, apply_policy, fit_demographic_parity, fit_equalized_odds  # noqa: E402
from .stats import percent_improvement, t_tail, t_test_pooled  # noqa: E402
from .tree import DecisionTree, TreeParams, fit  # noqa: E402
