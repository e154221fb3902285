"""Comparison metrics: PI, cardinality reduction, ranking and paired t-tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import stats

Verdict = Literal["better", "worse", "equal", "indeterminate"]


def performance_improvement(j_full: float, j_subset: float) -> Optional[float]:
    """Relative error reduction over the all-features baseline, in percent.

    Returns ``None`` when the baseline error is zero (metric undefined).
    """
    if j_full == 0:
        return None
    if j_full < 0:
        raise ValueError(f"baseline error must be non-negative, got {j_full}")
    return (j_full - j_subset) / j_full * 100.0


def cardinality_reduction(n: int, xi_avg: float) -> float:
    """Percentage of features removed on average."""
    if n < 1:
        raise ValueError(f"feature count must be >= 1, got {n}")
    if not 0 <= xi_avg <= n:
        raise ValueError(f"average cardinality {xi_avg} outside [0, {n}]")
    return (n - xi_avg) / n * 100.0


def rank_algorithms(scores: Sequence[Optional[float]], higher_is_better: bool = True) -> list[int]:
    """Rank = 1 + number of strictly better scores, so ties share a rank.

    ``None`` scores rank behind every real score.
    """
    worst = -math.inf if higher_is_better else math.inf
    vals = [worst if s is None else float(s) for s in scores]
    if higher_is_better:
        return [1 + sum(o > v for o in vals) for v in vals]
    return [1 + sum(o < v for o in vals) for v in vals]


@dataclass(frozen=True)
class TTest:
    verdict: Verdict
    t: float
    p: float


def paired_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTest:
    """Two-sided paired t-test of errors ``a`` against ``b``.

    ``better`` means ``a`` is significantly lower. Identical vectors are
    ``equal``; a constant non-zero difference is significant by its sign.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.ndim != 1 or a.size < 2:
        raise ValueError("paired t-test needs at least 2 paired values")
    d = a - b
    if np.all(d == 0):
        return TTest("equal", 0.0, 1.0)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0:
        t, p = math.copysign(math.inf, mean), 0.0
    else:
        t = mean / (sd / math.sqrt(d.size))
        p = float(2.0 * stats.t.sf(abs(t), d.size - 1))
    if p < alpha:
        return TTest("better" if mean < 0 else "worse", t, p)
    return TTest("indeterminate", t, p)


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())
