"""Confidence-interval helpers shared by the Monte Carlo checks.

Binomial proportions get Wilson score intervals (well behaved at zero
counts, which the coupling tails hit constantly); real-valued estimators
get plain normal intervals from their sample variance.
"""

from __future__ import annotations

import math

import numpy as np

# two-sided normal quantiles
Z99 = 2.5758293035489004  # 99%
Z4 = 4.0  # "within 4 sigma" oracle comparisons


def wilson_interval(successes, trials, z: float = Z99):
    """Wilson score interval for a binomial proportion.

    Accepts scalars or arrays of ``successes``; returns (lo, hi) with the
    same shape.  ``trials`` is a positive scalar.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    k = np.asarray(successes, dtype=float)
    n = float(trials)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = (z / denom) * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
    lo = np.clip(center - half, 0.0, 1.0)
    hi = np.clip(center + half, 0.0, 1.0)
    if np.ndim(successes) == 0:
        return float(lo), float(hi)
    return lo, hi


def mean_interval(values: np.ndarray, z: float = Z99):
    """Normal confidence interval for the mean of an i.i.d. sample.

    Returns (mean, halfwidth).  The halfwidth uses the unbiased sample
    variance; a single observation gets an infinite halfwidth rather than
    a misleading zero.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    mean = float(x.mean())
    if n == 1:
        return mean, math.inf
    half = z * float(x.std(ddof=1)) / math.sqrt(n)
    return mean, half


def mean_interval_from_moments(total: float, total_sq: float, n: int, z: float = Z99):
    """Same as :func:`mean_interval` but from streaming sums.

    ``total`` and ``total_sq`` are the sums of the values and their squares.
    Useful when replicas are reduced across workers without keeping samples.
    """
    if n <= 0:
        raise ValueError("empty sample")
    mean = total / n
    if n == 1:
        return mean, math.inf
    var = (total_sq - n * mean * mean) / (n - 1)
    var = max(var, 0.0)
    half = z * math.sqrt(var / n)
    return mean, half
