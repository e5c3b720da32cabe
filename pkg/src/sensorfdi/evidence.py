"""Basic belief assignment and the control-activity reliability signal.

Angular distances and the detection residual are mapped to belief masses over
the frame {fault on sensor 1, ..., fault on sensor n_x, no-fault}. When the
detection residual exceeds its threshold, per-sensor masses decay with angular
distance (reaching zero at 90 degrees for the default decay) and the no-fault
mass follows a sigmoid in the threshold exceedance; below the threshold the
fault masses are uniform and the no-fault mass dominates. The reliability
signal is a decreasing sigmoid of the control-activity norm, used to gate how
much fresh evidence updates the running posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .calibration import empirical_threshold

__all__ = [
    "BbaParams",
    "ReliabilityParams",
    "assign_bbm",
    "no_fault_weight",
    "reliability",
    "calibrate_reliability_threshold",
]

_LN2 = math.log(2.0)
_LN3 = math.log(3.0)

#: Per-degree decay that zeroes a fault mass exactly at 90 degrees.
DEFAULT_ANGLE_DECAY = _LN2 / 90.0


@dataclass(frozen=True)
class BbaParams:
    """Shape parameters of the belief assignment.

    ``angle_decay`` (per degree) controls how fast fault masses fall off with
    angular distance; ``slope`` (negative) controls the no-fault sigmoid
    around the detection threshold.
    """

    angle_decay: float
    slope: float
    threshold: float

    def __post_init__(self):
        if not self.angle_decay > 0:
            raise ValueError("angle_decay must be positive")
        if not self.slope < 0:
            raise ValueError("slope must be negative")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    @classmethod
    def from_threshold(
        cls,
        threshold: float,
        angle_decay: float = DEFAULT_ANGLE_DECAY,
        slope_factor: float = 20.0,
    ) -> "BbaParams":
        """Defaults anchored to the detection threshold.

        With slope = -slope_factor * ln(3) / threshold the no-fault mass is
        0.9 at 90% of the threshold and the no-fault weight 0.1 at 110%.
        """
        return cls(
            angle_decay=angle_decay,
            slope=-slope_factor * _LN3 / threshold,
            threshold=threshold,
        )


@dataclass(frozen=True)
class ReliabilityParams:
    """Sigmoid slope and threshold of the reliability signal."""

    slope: float
    threshold: float

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("slope must be positive")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    @classmethod
    def from_threshold(cls, threshold: float, slope_factor: float = 40.0) -> "ReliabilityParams":
        """Defaults anchored to the control-activity threshold.

        With slope = slope_factor * ln(3) / threshold the reliability is 0.9
        at 95% of the threshold and 0.1 at 105%.
        """
        return cls(slope=slope_factor * _LN3 / threshold, threshold=threshold)


def no_fault_weight(residual_magnitude: float, params: BbaParams) -> float:
    """Sigmoid no-fault weight: 0.5 at the threshold, decreasing in |residual|."""
    return float(expit(params.slope * (residual_magnitude - params.threshold)))


def assign_bbm(distances, residual: float, params: BbaParams) -> np.ndarray:
    """Belief masses over {fault 1..n_x, no-fault} from one sample's evidence.

    Above the detection threshold, the per-sensor terms 2 - exp(decay * d_i)
    (clamped at zero) and the no-fault weight are jointly rescaled to sum to
    one. At or below the threshold the masses already sum to one analytically:
    equal fault masses plus the dominant no-fault term. Output always
    satisfies the mass-vector invariants.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size < 1:
        raise ValueError("distances must be a nonempty 1-D array")
    n_x = d.size
    magnitude = abs(float(residual))
    nf = no_fault_weight(magnitude, params)
    if magnitude > params.threshold:
        fault = np.maximum(2.0 - np.exp(params.angle_decay * d), 0.0)
        total = fault.sum() + nf
        if total <= 0.0:
            # Unreachable for in-range inputs with the default decay; keeps
            # the assignment total for degenerate parameter choices.
            return np.full(n_x + 1, 1.0 / (n_x + 1))
        return np.append(fault, nf) / total
    fault = np.full(n_x, (1.0 - nf) / n_x)
    return np.append(fault, nf)


def reliability(u, params: ReliabilityParams) -> float:
    """Reliability in (0, 1): decreasing sigmoid of the control-activity norm."""
    norm = float(np.linalg.norm(np.asarray(u, dtype=float)))
    return float(expit(params.slope * (params.threshold - norm)))


def calibrate_reliability_threshold(activity_norms, false_alarm_prob: float) -> float:
    """Reliability threshold from the empirical CDF of training ||u||.

    Same empirical-quantile rule as the detection threshold.
    """
    return empirical_threshold(activity_norms, false_alarm_prob)
