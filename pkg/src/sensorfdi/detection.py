"""Null-space fault detection.

The detection versor is the right singular vector of the training matrix for
its smallest singular value: the direction of least explained variance, along
which fault-free data projects to approximately zero. The scalar projection of
a sample onto the versor is the detection residual, compared against a
threshold calibrated from the empirical CDF of fault-free residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import empirical_threshold
from .data import Dataset

__all__ = [
    "DetectionModel",
    "fit_detection_versor",
    "detection_residual",
    "calibrate_threshold",
    "detect",
]


@dataclass(frozen=True, eq=False)
class DetectionModel:
    """Unit detection versor plus calibration metadata.

    ``threshold`` is None until calibrated; ``sigma_min`` is the smallest
    singular value of the training matrix (the residual scale on training
    data).
    """

    versor: np.ndarray
    sigma_min: float
    threshold: float | None = None
    false_alarm_prob: float = 0.10

    def __post_init__(self):
        v = np.asarray(self.versor, dtype=float)
        if v.ndim != 1:
            raise ValueError("versor must be a 1-D vector")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("versor must have unit norm")
        if self.sigma_min < 0:
            raise ValueError("sigma_min must be nonnegative")
        if self.threshold is not None and self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if not 0.0 < self.false_alarm_prob < 1.0:
            raise ValueError("false_alarm_prob must lie in (0, 1)")
        object.__setattr__(self, "versor", v)

    @property
    def n(self) -> int:
        return self.versor.shape[0]


def fit_detection_versor(train: Dataset) -> DetectionModel:
    """Fit the anomaly-sensitive versor from normalized training data.

    Returns a model with the threshold unset. The sign convention (first
    nonzero component positive) makes the output reproducible; only the
    magnitude of the residual is ever thresholded.
    """
    Z = train.samples
    try:
        _, singular_values, vt = np.linalg.svd(Z, full_matrices=False)
    except np.linalg.LinAlgError as err:  # pragma: no cover - defensive
        raise np.linalg.LinAlgError(
            f"SVD failed on the {Z.shape[0]}x{Z.shape[1]} training matrix "
            f"(max |entry| = {np.abs(Z).max():.3g}): {err}"
        ) from err
    versor = vt[-1].copy()
    nonzero = np.nonzero(np.abs(versor) > 1e-12)[0]
    if nonzero.size and versor[nonzero[0]] < 0:
        versor = -versor
    return DetectionModel(versor=versor, sigma_min=float(singular_values[-1]))


def detection_residual(z, model: DetectionModel) -> float:
    """Scalar projection of one sample onto the detection versor."""
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n,):
        raise ValueError(f"sample has shape {z.shape}, expected ({model.n},)")
    return float(z @ model.versor)


def calibrate_threshold(residual_magnitudes, false_alarm_prob: float) -> float:
    """Detection threshold from the empirical CDF of fault-free |residual|."""
    return empirical_threshold(residual_magnitudes, false_alarm_prob)


def detect(residual: float, threshold: float) -> bool:
    """True iff |residual| strictly exceeds the threshold (equality is normal)."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return abs(residual) > threshold
