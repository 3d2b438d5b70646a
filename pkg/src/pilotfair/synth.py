"""Synthetic cohorts with the demographic and label skew of the pilot study.

The score distributions are free parameters, not estimates from real data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .dataset import Dataset, SEX_CODES
from .survey import INSTRUMENTS

DEFAULT_COUNTS = {"pilot": {"female": 9, "male": 19}, "non_pilot": {"female": 14, "male": 6}}
# non-pilot baseline means, one per instrument
DEFAULT_BASE_MEANS = (0.45, 0.35, 0.50, 0.50, 0.45, 0.45, 0.45, 0.50)
CONFOUNDED_SEX_SHIFT = 0.14


@dataclass(frozen=True)
class CohortSpec:
    """Cell counts and score distributions for :func:`generate`.

    Pilot means are the base means plus ``separation``. With ``sex_shift``
    nonzero, female scores are lowered by that amount in both cohorts, so
    female pilots resemble non-pilots.
    """

    cell_counts: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_COUNTS.items()})
    base_means: tuple[float, ...] = DEFAULT_BASE_MEANS
    spread: float = 0.05
    separation: float = 0.15
    sex_shift: float = 0.0
    age_range: tuple[int, int] = (18, 25)

    def __post_init__(self):
        object.__setattr__(self, "base_means", tuple(float(m) for m in self.base_means))
        object.__setattr__(self, "age_range", tuple(int(a) for a in self.age_range))
        if len(self.base_means) != len(INSTRUMENTS):
            raise ValueError(f"need {len(INSTRUMENTS)} base means")
        for cohort in ("pilot", "non_pilot"):
            for sex in ("female", "male"):
                if self.cell_counts.get(cohort, {}).get(sex, 0) < 0:
                    raise ValueError("cell counts must be nonnegative")
        if self.spread <= 0 or self.separation < 0:
            raise ValueError("spread must be positive and separation nonnegative")
        if self.age_range[0] > self.age_range[1]:
            raise ValueError("age_range must be (low, high) with low <= high")

    @classmethod
    def sex_confounded(cls, **overrides) -> "CohortSpec":
        overrides.setdefault("sex_shift", CONFOUNDED_SEX_SHIFT)
        return cls(**overrides)

    def means(self, label: int, sex: str) -> np.ndarray:
        m = np.array(self.base_means) + (self.separation if label == 1 else 0.0)
        if sex == "female":
            m = m - self.sex_shift
        return m

    def to_dict(self) -> dict:
        d = asdict(self)
        d["base_means"] = list(self.base_means)
        d["age_range"] = list(self.age_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CohortSpec":
        d = dict(d)
        if d.pop("confounded", False):
            d.setdefault("sex_shift", CONFOUNDED_SEX_SHIFT)
        return cls(**d)


def _truncated_normal(rng, mean, sd, size):
    out = rng.normal(mean, sd, size)
    bad = (out < 0) | (out > 1)
    while bad.any():
        out[bad] = rng.normal(np.broadcast_to(mean, size)[bad], sd)
        bad = (out < 0) | (out > 1)
    return out


def generate(spec: CohortSpec = CohortSpec(), rng_seed: int = 0) -> Dataset:
    """Draw a cohort with exact cell counts; rows ordered pilot F, pilot M, non-pilot F, non-pilot M."""
    rng = np.random.default_rng(rng_seed)
    X, y = [], []
    for cohort, label in (("pilot", 1), ("non_pilot", 0)):
        for sex in ("female", "male"):
            n = int(spec.cell_counts.get(cohort, {}).get(sex, 0))
            if n == 0:
                continue
            means = spec.means(label, sex)
            scores = _truncated_normal(rng, np.tile(means, (n, 1)), spec.spread, (n, len(means)))
            ages = rng.integers(spec.age_range[0], spec.age_range[1] + 1, size=n)
            block = np.column_stack([np.full(n, SEX_CODES[sex]), ages, scores])
            X.append(block)
            y.append(np.full(n, label))
    if not X:
        return Dataset(np.empty((0, 2 + len(INSTRUMENTS))), np.empty(0, dtype=int))
    return Dataset(np.vstack(X), np.concatenate(y))
