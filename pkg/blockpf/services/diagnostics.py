"""
Predictive statistics and the tests run on them.

A statistic: rank of the actual observation among K fictitious observations
drawn from the particle predictive. B statistic: particle predictive CDF at
the actual observation. Both are uniform (on {0..K} and (0,1)) when the
filter is exact, so block-wise Pearson chi-square tests, lag correlation and
moment checks on them measure how well the filter is doing.
"""

import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from scipy import special

from blockpf.core.exceptions import DomainError
from blockpf.services.bpf import PredictiveMixture
from blockpf.services.state_space import StateSpaceModel


# Predictive statistics
def a_statistic(y_t: float, fictitious: Sequence[float]) -> int:
    """Number of fictitious observations strictly smaller than y_t."""
    return int(np.count_nonzero(np.asarray(fictitious, dtype=float) < y_t))


def b_statistic(model: StateSpaceModel, pm: PredictiveMixture, y_t: float) -> float:
    """(1/M) sum_m P(Y <= y_t | xbar^(m)); raises UnsupportedModelError without a CDF."""
    if model is not pm.model:
        pm = replace(pm, model=model)
    return pm.cdf(y_t)


# Uniformity tests
def pearson_pvalue(counts: Sequence[int]) -> float:
    """
    Pearson chi-square p-value of observed bin counts against equal expected
    proportions, via the regularized upper incomplete gamma function.

    No minimum expected count is enforced; small windows (e.g. W=15 over 8
    bins) are tested as they are.
    """
    counts = np.asarray(counts, dtype=float)
    n_bins = len(counts)
    total = counts.sum()
    if n_bins < 2 or total <= 0:
        raise DomainError("need at least two bins and one observation")
    expected = total / n_bins
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return min(1.0, max(0.0, float(special.gammaincc((n_bins - 1) / 2.0, chi2 / 2.0))))


def _check_a_values(a_values: Sequence[int], K: int) -> np.ndarray:
    values = np.asarray(a_values)
    if values.size == 0:
        raise DomainError("statistic list is empty")
    if np.any(values < 0) or np.any(values > K) or np.any(values != np.round(values)):
        raise DomainError(f"A statistics must be integers in {{0, ..., {K}}}")
    return values.astype(int)


def chi2_uniformity_pvalue(a_values: Sequence[int], K: int) -> float:
    """p-value of the uniformity test of A statistics over K+1 bins (K dof)."""
    values = _check_a_values(a_values, K)
    return pearson_pvalue(np.bincount(values, minlength=K + 1))


def _b_bin_counts(b_values: Sequence[float], n_bins: int) -> np.ndarray:
    values = np.asarray(b_values, dtype=float)
    if values.size == 0 or np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError("B statistics must be a non-empty list in [0, 1]")
    # b = 1 falls in the last bin
    bins = np.minimum((values * n_bins).astype(int), n_bins - 1)
    return np.bincount(bins, minlength=n_bins)


def b_uniformity_pvalue(b_values: Sequence[float], n_bins: int) -> float:
    """p-value of the uniformity test of B statistics over n_bins equal bins of [0,1]."""
    return pearson_pvalue(_b_bin_counts(b_values, n_bins))


# Dependence and pmf
def lag_correlation(values: Sequence[float], lag: int = 1) -> Optional[float]:
    """
    Pearson correlation between the sequence and its lag-shifted copy.

    Returns:
        r in [-1, 1], or None when either slice has zero variance.
    """
    v = np.asarray(values, dtype=float)
    if lag < 1 or v.size <= lag + 1:
        raise ValueError(f"need more than lag + 1 = {lag + 1} values, got {v.size}")
    head, tail = v[:-lag], v[lag:]
    dh, dt = head - head.mean(), tail - tail.mean()
    denom = math.sqrt(float(dh @ dh) * float(dt @ dt))
    if denom == 0.0:
        return None
    return max(-1.0, min(1.0, float(dh @ dt) / denom))


def empirical_pmf(a_values: Sequence[int], K: int) -> np.ndarray:
    """Normalised histogram of A statistics over {0, ..., K}."""
    values = _check_a_values(a_values, K)
    return np.bincount(values, minlength=K + 1) / values.size


def b_histogram(b_values: Sequence[float], n_bins: int) -> np.ndarray:
    """Normalised histogram of B statistics over n_bins equal bins of [0, 1]."""
    counts = _b_bin_counts(b_values, n_bins)
    return counts / counts.sum()


# Moment checks
def moment_check(b_values: Sequence[float], n_max: int) -> np.ndarray:
    """Sample moments m_j = mean(b^j), j = 1..n_max; each should be near 1/(j+1)."""
    b = np.asarray(b_values, dtype=float)
    return np.array([np.mean(b ** j) for j in range(1, n_max + 1)])


def uniform_moment_sd(j: int) -> float:
    """Standard deviation of U^j for U ~ U(0,1)."""
    return math.sqrt(1.0 / (2 * j + 1) - 1.0 / (j + 1) ** 2)


def moment_pvalue(b_values: Sequence[float], n_max: int) -> float:
    """
    Bonferroni-combined two-sided p-value of the largest standardised moment
    deviation from the U(0,1) moments 1/(j+1).
    """
    moments = moment_check(b_values, n_max)
    n = len(b_values)
    z = [
        abs(moments[j - 1] - 1.0 / (j + 1)) / (uniform_moment_sd(j) / math.sqrt(n))
        for j in range(1, n_max + 1)
    ]
    return min(1.0, n_max * 2.0 * float(special.ndtr(-max(z))))
