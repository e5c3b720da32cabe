"""Empirical-quantile threshold rule shared by detection and reliability."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["empirical_threshold"]


def empirical_threshold(values, false_alarm_prob: float) -> float:
    """Smallest observed value whose empirical CDF reaches 1 - false_alarm_prob.

    With CDF(t) = #{samples <= t} / N, the returned threshold is the
    ceil((1 - p) * N)-th order statistic: the minimum over observed values
    satisfying the CDF condition, with ties kept and no interpolation. On the
    calibration series itself, at most a fraction ``false_alarm_prob`` of
    samples lie strictly above the threshold.
    """
    if not 0.0 < false_alarm_prob < 1.0:
        raise ValueError("false_alarm_prob must lie in (0, 1)")
    series = np.asarray(values, dtype=float).ravel()
    if series.size == 0:
        raise ValueError("cannot calibrate a threshold from an empty series")
    if not np.isfinite(series).all():
        raise ValueError("calibration series contains non-finite values")
    ordered = np.sort(series)
    n = series.size
    # 1-based rank of the smallest order statistic with rank/n >= 1 - p;
    # written as n - floor(p*n) to avoid float-rounding artifacts in ceil().
    rank = n - int(math.floor(false_alarm_prob * n))
    rank = min(max(rank, 1), n)
    return float(ordered[rank - 1])
