"""Order statistics underlying the meta-metrics.

Two rank conventions are supported throughout:

* ``midrank`` (default): tied values share the mean of the 1-based sorted
  positions they occupy.  With this convention a score vector that is a
  strictly decreasing function of the error counts correlates at exactly -1
  even in the presence of ties, which is the behaviour the meta-metrics
  rely on.
* ``countbelow``: each value is ranked by the number of strictly smaller
  values in the sample (an integer in [0, n-1]).  Ties are penalized.

Spearman's rho is the Pearson correlation of the chosen rank vectors, using
population (divide-by-n) covariance and standard deviations.  When either
rank vector is constant the correlation is defined to be exactly 0.0 rather
than NaN: a constant series carries no ordering information.  Because both
rank conventions produce half-integer ranks, the correlation is evaluated
in exact integer arithmetic on doubled ranks; perfectly (anti)monotone
inputs therefore return exactly +/-1.0, ties included.

The two-sample Kolmogorov-Smirnov statistic uses the right-continuous
empirical CDF, F(x) = fraction of sample values <= x, and takes the
supremum over all pooled sample points.
"""

from __future__ import annotations

import math
from typing import Literal, Sequence

import numpy as np

TieMode = Literal["midrank", "countbelow"]

TIE_MODES = ("midrank", "countbelow")


def _check_sample(values: Sequence[float], name: str = "sample") -> list[float]:
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError(f"{name} must be non-empty")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"{name} contains non-finite values")
    return vals


def rank_transform(values: Sequence[float], tie_mode: TieMode = "midrank") -> list[float]:
    """Rank a sample under the given tie convention.

    midrank ranks are 1-based and sum to n(n+1)/2; countbelow ranks are
    0-based integers counting strictly smaller sample values.
    """
    if tie_mode not in TIE_MODES:
        raise ValueError(f"unknown tie_mode: {tie_mode!r}")
    x = _check_sample(values)
    n = len(x)
    order = sorted(range(n), key=lambda i: x[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        if tie_mode == "midrank":
            # tie group occupies 1-based positions i+1 .. j+1
            rank = (i + j) / 2 + 1
        else:
            rank = float(i)  # exactly i values are strictly smaller
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _doubled_int_ranks(values: list[float], tie_mode: TieMode) -> list[int]:
    # both conventions produce half-integer ranks, exact once doubled
    return [int(r * 2) for r in rank_transform(values, tie_mode)]


def spearman_rho(
    x: Sequence[float],
    y: Sequence[float],
    tie_mode: TieMode = "midrank",
) -> float:
    """Spearman rank correlation of two equal-length samples, in [-1, 1].

    Returns exactly 0.0 when either rank vector is constant, and exactly
    +/-1.0 when the rank vectors are affinely dependent.
    """
    xs = _check_sample(x, "x")
    ys = _check_sample(y, "y")
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    rx = _doubled_int_ranks(xs, tie_mode)
    ry = _doubled_int_ranks(ys, tie_mode)
    n = len(rx)
    sx, sy = sum(rx), sum(ry)
    # population moments scaled by n^2; exact in integer arithmetic
    num = n * sum(a * b for a, b in zip(rx, ry)) - sx * sy
    vx = n * sum(a * a for a in rx) - sx * sx
    vy = n * sum(b * b for b in ry) - sy * sy
    if vx == 0 or vy == 0:
        return 0.0
    if num * num == vx * vy:
        return 1.0 if num > 0 else -1.0
    rho = num / math.sqrt(vx * vy)
    return max(-1.0, min(1.0, rho))


def ks_statistic(x: Sequence[float], y: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, in [0, 1].

    sup over pooled sample points t of |F_X(t) - F_Y(t)|, with
    F(t) = fraction of values <= t.
    """
    xa = np.sort(np.asarray(_check_sample(x, "x")))
    ya = np.sort(np.asarray(_check_sample(y, "y")))
    pooled = np.concatenate([xa, ya])
    fx = np.searchsorted(xa, pooled, side="right") / xa.size
    fy = np.searchsorted(ya, pooled, side="right") / ya.size
    return float(np.max(np.abs(fx - fy)))


def population_moments(values: Sequence[float]) -> tuple[float, float]:
    """(mean, population standard deviation) of a non-empty sample."""
    x = np.asarray(_check_sample(values))
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    return mean, float(np.sqrt(var))
