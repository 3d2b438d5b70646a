"""Pooled two-sample t-test, Student-t tail probabilities, percent improvement."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from decimal import Decimal, ROUND_DOWN, ROUND_HALF_UP
from typing import Sequence

_MAX_ITER = 300
_EPS = 1e-15
_TINY = 1e-300


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    mean_a: float = float("nan")
    mean_b: float = float("nan")
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"t": self.t_statistic, "df": self.degrees_of_freedom, "p_value": self.p_value,
                "mean_a": self.mean_a, "mean_b": self.mean_b, "degenerate": self.degenerate}


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = _TINY if abs(d) < _TINY else d
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_tail(t: float, df: float) -> float:
    """Two-sided tail ``P(|T_df| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)``."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def t_test_pooled(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTestResult:
    """Student's equal-variance two-sample t-test, two-sided."""
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least two values")
    m1, m2 = sum(a) / n1, sum(b) / n2
    ss = sum((v - m1) ** 2 for v in a) + sum((v - m2) ** 2 for v in b)
    df = n1 + n2 - 2
    sp2 = ss / df
    diff = m1 - m2
    if sp2 == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, df, 1.0, m1, m2, degenerate=True)
        warnings.warn("zero pooled variance with unequal means; reporting p = 0", RuntimeWarning)
        return TTestResult(math.copysign(math.inf, diff), df, 0.0, m1, m2, degenerate=True)
    t = diff / math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    return TTestResult(t, df, t_tail(t, df), m1, m2)


def percent_improvement(before: float, after: float) -> float:
    """``|before - after| / before * 100``."""
    if before == 0:
        raise ZeroDivisionError("percent improvement undefined for before == 0")
    return abs(before - after) / before * 100.0


def format_percent(value: float, digits: int = 2, mode: str = "round") -> str:
    """Fixed-point percent text; ``mode`` is ``round`` (half up) or ``truncate``."""
    q = Decimal(1).scaleb(-digits)
    rounding = ROUND_HALF_UP if mode == "round" else ROUND_DOWN
    return f"{Decimal(repr(float(value))).quantize(q, rounding=rounding)}%"
