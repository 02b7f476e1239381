"""Monte Carlo estimates with standard errors, reduced in a fixed order."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    def z(self, expected: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == expected else math.copysign(math.inf, self.mean - expected)
        return (self.mean - expected) / self.stderr

    def within(self, expected: float, k: float = 3.0) -> bool:
        return abs(self.mean - expected) <= k * self.stderr


def fsum_mean(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return math.fsum(x.tolist()) / x.size


def mean_se(samples) -> Estimate:
    """Sample mean and its standard error.

    Sums use compensated summation so the result does not depend on how the
    samples were chunked across workers.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    m = fsum_mean(x)
    if n == 1:
        return Estimate(m, 0.0, 1)
    var = math.fsum(((x - m) ** 2).tolist()) / (n - 1)
    return Estimate(m, math.sqrt(var / n), n)


def proportion(hits: int, n: int) -> Estimate:
    if n <= 0:
        raise ValueError("no trials")
    p = hits / n
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)


def proportion_vs(hits: int, n: int, p0: float) -> tuple[Estimate, float]:
    """Proportion estimate plus its z-score with the standard error taken under ``p0``."""
    est = proportion(hits, n)
    se0 = math.sqrt(p0 * (1.0 - p0) / n)
    return est, (est.mean - p0) / se0


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample Kolmogorov-Smirnov critical value."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c / math.sqrt(n)


def slope(x, y) -> float:
    """Least-squares slope of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("x values must not all coincide")
    return float(((x - xm) * (y - y.mean())).sum()) / sxx
