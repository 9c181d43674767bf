"""Probability transforms, correlation/rank statistics, bootstrap, OLS.

Everything here is pure given a seed. Bootstrap resamples draw their random
substream from (seed, resample index, attempt), so results are independent
of evaluation order and re-runs are bit identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesignError,
    DegenerateDistributionError,
    DegenerateError,
    UndefinedCorrelationError,
)

DEFAULT_LOGIT_SMOOTHING = 1e-6


@dataclass(frozen=True)
class PairedSeries:
    """Two aligned real-valued series, optionally labeled per point."""

    x: np.ndarray
    y: np.ndarray
    labels: tuple | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.ndim != 1 or self.y.ndim != 1 or len(self.x) != len(self.y):
            raise ValueError("x and y must be 1-d and equally long")
        if len(self.x) < 2:
            raise ValueError("paired series needs at least 2 points")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("paired series must be finite")
        if self.labels is not None and len(self.labels) != len(self.x):
            raise ValueError("labels must match series length")

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    t_slope: float
    df: int


@dataclass(frozen=True)
class CalibrationBin:
    bin_center: float
    mean_model_prob: float
    ci_low: float
    ci_high: float
    n: int


@dataclass(frozen=True)
class CalibrationCurve:
    bins: tuple[CalibrationBin, ...]


def logit(p: float, alpha: float = DEFAULT_LOGIT_SMOOTHING) -> float:
    """Smoothed log-odds ln((p + alpha) / (1 - p + alpha)).

    The symmetric smoothing keeps the transform total on [0, 1] and exactly
    antisymmetric about p = 0.5: logit(p) + logit(1 - p) == 0 whenever the
    complement is representable.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    # computed as a difference of logs so the antisymmetry is exact in floats
    return math.log(p + alpha) - math.log(1.0 - p + alpha)


def luce_renormalize(probs) -> list[float]:
    """Normalize positive scores to a distribution by dividing by their sum."""
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("probs must be a non-empty 1-d sequence")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValueError("probs must be finite and nonnegative")
    total = arr.sum()
    if total == 0.0:
        raise DegenerateDistributionError("cannot renormalize an all-zero score vector")
    return [float(v) for v in arr / total]


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for zero-variance series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson(s: PairedSeries) -> float:
    """Sample Pearson correlation of the paired series."""
    return _pearson(s.x, s.y)


def average_ranks(values) -> np.ndarray:
    """Ascending average-tie ranks, 1 = smallest."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    sv = v[order]
    new_group = np.r_[True, sv[1:] != sv[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    starts = ends - counts
    group_rank = (starts + ends - 1) / 2.0 + 1.0
    out = np.empty(len(v))
    out[order] = group_rank[group]
    return out


def spearman(s: PairedSeries) -> float:
    """Rank correlation: Pearson over average-tie ranks of both series."""
    return _pearson(average_ranks(s.x), average_ranks(s.y))


def within_stem_ranks(values) -> np.ndarray:
    """Descending average-tie ranks: rank 1 = largest value.

    Zero scores (e.g. unseen words under an n-gram model) are simply the
    smallest values and therefore rank after every positive score, sharing
    average ranks among themselves.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    return average_ranks(-v)


_MAX_RESAMPLE_ATTEMPTS = 10


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float


def bootstrap_ci(stat, data, n_resamples: int = 1000, seed: int = 0) -> ConfidenceInterval:
    """Percentile (2.5, 97.5) bootstrap interval of a statistic.

    data is a PairedSeries (rows resampled jointly) or a 1-d sequence.
    Resamples on which the statistic is degenerate are redrawn from a fresh
    substream, at most 10 attempts each.
    """
    if n_resamples < 100:
        raise ValueError(f"n_resamples must be >= 100, got {n_resamples}")
    paired = isinstance(data, PairedSeries)
    if paired:
        n = len(data)
    else:
        data = np.asarray(data, dtype=float)
        n = len(data)
        if n == 0:
            raise ValueError("data must be non-empty")

    values = np.empty(n_resamples)
    for i in range(n_resamples):
        for attempt in range(_MAX_RESAMPLE_ATTEMPTS):
            rng = np.random.default_rng([seed, i, attempt])
            idx = rng.integers(0, n, n)
            sample = PairedSeries(data.x[idx], data.y[idx]) if paired else data[idx]
            try:
                values[i] = stat(sample)
                break
            except DegenerateError:
                continue
        else:
            raise DegenerateError(
                f"statistic degenerate on {_MAX_RESAMPLE_ATTEMPTS} consecutive redraws"
            )
    low, high = np.percentile(values, [2.5, 97.5])
    return ConfidenceInterval(low=float(low), high=float(high))


def ols_fit(s: PairedSeries) -> RegressionFit:
    """Ordinary least squares y = slope * x + intercept with slope t statistic."""
    n = len(s)
    if n < 3:
        raise ValueError("OLS needs at least 3 points")
    x, y = s.x, s.y
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateDesignError("zero predictor variance")
    slope = float(dx @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    df = n - 2
    sigma2 = float(resid @ resid) / df
    slope_se = math.sqrt(sigma2 / sxx)
    intercept_se = math.sqrt(sigma2 * (1.0 / n + x.mean() ** 2 / sxx))
    if slope_se > 0:
        t_slope = slope / slope_se
    elif slope != 0:
        t_slope = math.copysign(math.inf, slope)
    else:
        t_slope = 0.0
    return RegressionFit(
        slope=slope,
        intercept=intercept,
        slope_se=slope_se,
        intercept_se=intercept_se,
        t_slope=float(t_slope),
        df=df,
    )


def calibration_curve(pairs: PairedSeries, n_bins: int, seed: int = 0) -> CalibrationCurve:
    """Mean model probability per equal-width cloze-probability bin.

    pairs.x are cloze probabilities in [0, 1]; pairs.y model probabilities.
    Each emitted bin carries a bootstrap CI of its mean; empty bins are
    omitted.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    x, y = pairs.x, pairs.y
    if (x < 0).any() or (x > 1).any():
        raise ValueError("cloze probabilities must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.digitize(x, edges[1:-1], right=False), 0, n_bins - 1)
    bins: list[CalibrationBin] = []
    for b in range(n_bins):
        members = y[idx == b]
        if len(members) == 0:
            continue
        mean = float(members.mean())
        if len(members) == 1:
            ci = ConfidenceInterval(mean, mean)
        else:
            ci = bootstrap_ci(lambda v: float(np.mean(v)), members, n_resamples=1000, seed=seed + b)
        bins.append(
            CalibrationBin(
                bin_center=float((edges[b] + edges[b + 1]) / 2.0),
                mean_model_prob=mean,
                ci_low=ci.low,
                ci_high=ci.high,
                n=int(len(members)),
            )
        )
    return CalibrationCurve(bins=tuple(bins))
