"""Recursive evidence fusion and the isolation decision.

Masses live on the Bayesian frame {fault 1..n_x, no-fault}, ordered with the
no-fault event last. The conjunctive combination of two mass vectors on a
singleton frame reduces to the normalized elementwise product; the recursive
filter combines the running posterior with each new evidence vector, scales
the resulting increment by the reliability signal, and floors/renormalizes the
masses so accumulated evidence can never lock at 0 or 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "MASS_FLOOR",
    "TotalConflictError",
    "FusionState",
    "IsolationDecision",
    "uniform_masses",
    "validate_masses",
    "mass_agreement",
    "ds_combine",
    "desaturate",
    "reliability_weighted_masses",
    "rb_update",
    "classic_update",
    "init_state",
    "isolate",
    "COMBINATION_RULES",
    "register_rule",
]

log = logging.getLogger(__name__)

#: Lower bound applied to every mass before renormalization.
MASS_FLOOR = 1e-4


class TotalConflictError(ValueError):
    """Raised when two mass vectors have disjoint support (agreement H = 0)."""


def uniform_masses(n_x: int) -> np.ndarray:
    """Uniform mass vector over n_x fault events plus the no-fault event."""
    if n_x < 1:
        raise ValueError("need at least one fault event")
    return np.full(n_x + 1, 1.0 / (n_x + 1))


def validate_masses(masses, tol: float = 1e-9) -> np.ndarray:
    """Check mass-vector invariants and return the vector as a float array."""
    m = np.asarray(masses, dtype=float)
    if m.ndim != 1 or m.size < 2:
        raise ValueError("mass vector must be 1-D with at least two events")
    if np.any(m < -tol) or np.any(m > 1 + tol):
        raise ValueError("masses must lie in [0, 1]")
    if abs(m.sum() - 1.0) > tol:
        raise ValueError(f"masses must sum to 1 (got {m.sum()!r})")
    return m


def mass_agreement(m1, m2) -> float:
    """Agreement H of a combination: one minus the conflicting mass."""
    return float(np.dot(np.asarray(m1, float), np.asarray(m2, float)))


def ds_combine(m1, m2) -> np.ndarray:
    """Conjunctive combination of two mass vectors on the singleton frame.

    Reduces to the normalized elementwise product; raises TotalConflictError
    when the supports are disjoint and the rule is undefined.
    """
    a = np.asarray(m1, dtype=float)
    b = np.asarray(m2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"mass vectors must share one frame, got {a.shape} and {b.shape}")
    product = a * b
    agreement = product.sum()
    if agreement <= 0.0:
        raise TotalConflictError("vacuous combination, H = 0")
    return product / agreement


def desaturate(masses) -> np.ndarray:
    """Floor every mass at MASS_FLOOR, then renormalize to sum one."""
    floored = np.maximum(np.asarray(masses, dtype=float), MASS_FLOOR)
    return floored / floored.sum()


def reliability_weighted_masses(posterior, evidence, rel: float) -> np.ndarray:
    """Posterior plus the reliability-scaled combination increment.

    Computes the conjunctive combination of posterior and evidence, then moves
    the posterior toward it by the fraction ``rel``: rel = 0 keeps the
    posterior, rel = 1 adopts the combination. No desaturation is applied.
    """
    if not 0.0 <= rel <= 1.0:
        raise ValueError("rel must lie in [0, 1]")
    posterior = np.asarray(posterior, dtype=float)
    combined = ds_combine(posterior, evidence)
    return posterior + rel * (combined - posterior)


@dataclass(frozen=True, eq=False)
class FusionState:
    """Running posterior of the recursive filter."""

    posterior: np.ndarray
    rule: str = "RB"
    step_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "posterior", validate_masses(self.posterior))

    @property
    def n_x(self) -> int:
        return self.posterior.size - 1


@dataclass(frozen=True)
class IsolationDecision:
    """Verdict of the argmax isolation logic.

    ``channel`` is None for no-fault, otherwise the index of the isolated
    sensor. ``winning_mass`` is the largest posterior mass.
    """

    channel: int | None
    winning_mass: float

    @property
    def is_fault(self) -> bool:
        return self.channel is not None


def init_state(n_x: int, rule: str = "RB") -> FusionState:
    """Fresh filter state: uniform posterior (no-fault wins the initial tie)."""
    return FusionState(posterior=uniform_masses(n_x), rule=rule)


def rb_update(state: FusionState, evidence, rel: float) -> FusionState:
    """Reliability-weighted recursive update of the posterior.

    On total conflict the update is skipped (posterior unchanged) and the
    event logged; with floored posteriors this is a defensive path only.
    """
    try:
        updated = reliability_weighted_masses(state.posterior, evidence, rel)
    except TotalConflictError:
        log.warning("total conflict at step %d, update skipped", state.step_count)
        return replace(state, step_count=state.step_count + 1)
    return FusionState(
        posterior=desaturate(updated), rule=state.rule, step_count=state.step_count + 1
    )


def classic_update(state: FusionState, evidence) -> FusionState:
    """Plain recursive combination: equivalent to rb_update with rel = 1."""
    return FusionState(
        posterior=desaturate(ds_combine(state.posterior, evidence)),
        rule=state.rule,
        step_count=state.step_count + 1,
    )


def isolate(state: FusionState) -> IsolationDecision:
    """Argmax over the posterior; no-fault wins ties, then lowest channel."""
    posterior = state.posterior
    winning = float(posterior.max())
    if posterior[-1] == winning:
        return IsolationDecision(channel=None, winning_mass=winning)
    return IsolationDecision(channel=int(np.argmax(posterior[:-1])), winning_mass=winning)


# --- combination-rule plugin interface ------------------------------------
#
# A rule maps (posterior, evidence, reliability) to a new posterior and must
# preserve the mass-vector invariants. The two shipped rules are the
# reliability-weighted update and the plain recursive combination; additional
# rules can be registered by name.

RuleFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _rb_rule(posterior, evidence, rel):
    return desaturate(reliability_weighted_masses(posterior, evidence, rel))


def _classic_rule(posterior, evidence, rel):
    return desaturate(ds_combine(posterior, evidence))


COMBINATION_RULES: dict[str, RuleFn] = {
    "RB": _rb_rule,
    "DS": _classic_rule,
}


def register_rule(name: str, fn: RuleFn) -> None:
    """Register a combination rule for use by the pipeline."""
    if name in COMBINATION_RULES:
        raise ValueError(f"rule {name!r} is already registered")
    COMBINATION_RULES[name] = fn
