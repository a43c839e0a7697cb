"""
Paired comparison tests on score differences.

    wilcoxon_signed_rank   exact null for n <= 25, normal approximation above
    paired_ttest           Student t on the mean difference
    sign_test              exact binomial on the signs

Zero differences are dropped by the rank and sign tests. All p-values are
two-sided.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from extremescore.errors import AllZeroDifferencesError, DegenerateVarianceError, DomainError

EXACT_WILCOXON_MAX_N = 25


class TestResult(BaseModel):
    __test__ = False

    model_config = ConfigDict(frozen=True)

    statistic: float
    p_value: float = Field(ge=0, le=1)
    n_effective: int
    proportion: float | None = None  # sign test: share of negative differences


def _nonzero(diffs) -> np.ndarray:
    d = np.asarray(diffs, dtype=float).ravel()
    d = d[d != 0]
    if d.size == 0:
        raise AllZeroDifferencesError("every difference is zero")
    return d


# ---------------------------------------------------------------------------
# Wilcoxon signed rank
# ---------------------------------------------------------------------------
def _exact_rank_sum_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """counts[k] = number of sign patterns whose doubled positive-rank sum is k."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks.astype(int):
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    return counts


def wilcoxon_signed_rank(diffs) -> TestResult:
    """Statistic is T+, the rank sum of the positive differences."""
    d = _nonzero(diffs)
    n = d.size
    ranks = stats.rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())

    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2.0 * ranks)
        counts = _exact_rank_sum_counts(doubled)
        k = int(round(2.0 * t_plus))
        total = counts.sum()
        lower = counts[: k + 1].sum() / total
        upper = counts[k:].sum() / total
        p = min(1.0, 2.0 * min(lower, upper))
        return TestResult(statistic=t_plus, p_value=p, n_effective=n)

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    dev = t_plus - mean
    if abs(dev) <= 0.5:
        z = 0.0
    else:
        z = (dev - 0.5 * math.copysign(1.0, dev)) / math.sqrt(var)
    p = min(1.0, 2.0 * float(stats.norm.sf(abs(z))))
    return TestResult(statistic=t_plus, p_value=p, n_effective=n)


# ---------------------------------------------------------------------------
# t-test
# ---------------------------------------------------------------------------
def paired_ttest(diffs) -> TestResult:
    d = np.asarray(diffs, dtype=float).ravel()
    if d.size < 2:
        raise DomainError("paired_ttest needs at least two differences")
    if np.var(d) == 0:
        raise DegenerateVarianceError("differences have zero variance")
    res = stats.ttest_1samp(d, 0.0)
    p = float(res.pvalue)
    return TestResult(statistic=float(res.statistic), p_value=min(max(p, 0.0), 1.0), n_effective=d.size)


# ---------------------------------------------------------------------------
# Sign test
# ---------------------------------------------------------------------------
def sign_test(diffs) -> TestResult:
    """Binomial(n, ½) test on the number of positive differences."""
    d = _nonzero(diffs)
    n = d.size
    positives = int(np.sum(d > 0))
    res = stats.binomtest(positives, n, 0.5, alternative="two-sided")
    return TestResult(
        statistic=float(positives),
        p_value=min(float(res.pvalue), 1.0),
        n_effective=n,
        proportion=(n - positives) / n,
    )


def sign_test_rejection_limit(n: int, alpha: float = 0.05) -> float:
    """Largest proportion of negative differences still rejected at level alpha.

    The matching upper limit is 1 minus this value. NaN when n is too small
    for any rejection.
    """
    if n < 1:
        raise DomainError("n must be positive")
    k = int(stats.binom.ppf(alpha / 2.0, n, 0.5))
    while k >= 0 and 2.0 * stats.binom.cdf(k, n, 0.5) >= alpha:
        k -= 1
    return k / n if k >= 0 else math.nan


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(n)).proportion_ci(
        confidence_level=confidence, method="wilson"
    )
    return float(ci.low), float(ci.high)
