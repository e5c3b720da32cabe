"""Optimized directional residual design.

Finds a fault-direction matrix whose rows generate residuals that are small on
fault-free training data while the first n_x columns (the per-sensor fault
signatures) stay mutually orthogonal with a fixed -1 diagonal. A fault on
sensor i then moves the residual vector along signature column i, and the
angular distance between the residual and each signature identifies the faulty
sensor independently of the fault amplitude.

The feasible set is parametrized exactly: the signature block is Q @ D with Q
orthogonal and D diagonal, D[i, i] = -1 / Q[i, i], which enforces both
constraints at every iterate. The solver alternates a least-squares update of
the input-channel block with a backtracking projected-gradient step on Q
(retraction by polar projection), so the objective is monotonically
nonincreasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = [
    "SolverOptions",
    "IsolationModel",
    "optimize_fault_directions",
    "directional_residual",
    "angular_distances",
]

log = logging.getLogger(__name__)

_DIAG_GUARD = 1e-8
_MAX_RESTARTS = 10


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the block-coordinate solver."""

    max_iters: int = 500
    tol: float = 1e-8
    step: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")


@dataclass(frozen=True, eq=False)
class IsolationModel:
    """Fault-direction matrix with solver diagnostics.

    ``directions`` is n_x x n; its first n_x columns are the fault signatures
    (diagonal exactly -1, unit-normalized columns pairwise orthogonal).
    ``objective`` is the Frobenius norm of the training residual matrix.
    """

    directions: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        W = np.asarray(self.directions, dtype=float)
        if W.ndim != 2 or W.shape[1] < W.shape[0]:
            raise ValueError("directions must be n_x x n with n >= n_x")
        n_x = W.shape[0]
        if np.any(np.diag(W[:, :n_x]) != -1.0):
            raise ValueError("signature diagonal must be exactly -1")
        unit = _unit_signatures(W)
        gram = np.abs(unit.T @ unit - np.eye(n_x))
        if gram.max() >= 1e-6:
            raise ValueError(
                f"signature columns are not orthogonal (max |cos| = {gram.max():.3g})"
            )
        object.__setattr__(self, "directions", W)

    @property
    def n_x(self) -> int:
        return self.directions.shape[0]

    @property
    def n(self) -> int:
        return self.directions.shape[1]

    @property
    def signatures(self) -> np.ndarray:
        """Fault-signature columns (n_x x n_x block)."""
        return self.directions[:, : self.n_x]

    @property
    def unit_signatures(self) -> np.ndarray:
        return _unit_signatures(self.directions)


def _unit_signatures(directions: np.ndarray) -> np.ndarray:
    n_x = directions.shape[0]
    block = directions[:, :n_x]
    norms = np.linalg.norm(block, axis=0)
    if np.any(norms == 0):
        raise ValueError("signature column with zero norm")
    return block / norms


def _signature_block(Q: np.ndarray) -> np.ndarray:
    """Map an orthogonal Q to the feasible signature block Q @ diag(-1/Q_ii)."""
    block = -Q / np.diag(Q)[np.newaxis, :]
    np.fill_diagonal(block, -1.0)
    return block


def _polar(Q: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(Q)
    return u @ vt


def optimize_fault_directions(
    train: Dataset, opts: SolverOptions = SolverOptions()
) -> IsolationModel:
    """Solve the constrained residual-minimization for the direction matrix.

    Expects normalized training data with at least two monitored sensors.
    Starts from the parity-style structure (signature block = -I, input block
    fit by least squares), which is feasible, and only accepts steps that
    decrease the Frobenius objective.
    """
    if train.n_x < 2:
        raise ValueError("orthogonal signatures need at least two monitored sensors")
    if train.m <= train.n:
        raise ValueError("need more samples than channels to fit fault directions")
    X = train.x
    U = train.u
    n_x = train.n_x
    rng = np.random.default_rng(opts.seed)

    def input_block_for(signature_block: np.ndarray) -> np.ndarray:
        # Least-squares fill-in of the u-coefficients for a fixed signature
        # block: minimizes || X B^T + U Wu^T ||_F column by column.
        sol, _, _, _ = np.linalg.lstsq(U, -(X @ signature_block.T), rcond=None)
        return sol.T

    def objective_for(signature_block: np.ndarray, input_block: np.ndarray):
        residual = X @ signature_block.T + U @ input_block.T
        return float(np.linalg.norm(residual)), residual

    Q = np.eye(n_x)
    block = _signature_block(Q)
    wu = input_block_for(block)
    objective, residual = objective_for(block, wu)
    history = [objective]

    converged = False
    restarts = 0
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        # Gradient of the squared objective w.r.t. the signature block, chained
        # through the Q @ diag(-1/Q_ii) parametrization.
        grad_block = 2.0 * residual.T @ X
        inv_diag = 1.0 / np.diag(Q)
        grad_q = -grad_block * inv_diag[np.newaxis, :]
        grad_q[np.diag_indices(n_x)] += (grad_block * Q).sum(axis=0) * inv_diag**2
        sym = 0.5 * (Q.T @ grad_q + grad_q.T @ Q)
        tangent = grad_q - Q @ sym

        step = opts.step
        accepted = False
        while step > 1e-14:
            candidate = _polar(Q - step * tangent)
            if np.abs(np.diag(candidate)).min() < _DIAG_GUARD:
                # Structural degeneracy: a zero diagonal entry makes the
                # parametrization blow up. Retry from a nearby random rotation.
                restarts += 1
                if restarts > _MAX_RESTARTS:
                    raise RuntimeError(
                        "fault-direction solver failed: zero-diagonal "
                        f"parametrization after {_MAX_RESTARTS} restarts"
                    )
                jitter = rng.normal(scale=1e-3, size=Q.shape)
                candidate = _polar(Q + jitter - jitter.T)
                if np.abs(np.diag(candidate)).min() < _DIAG_GUARD:
                    step *= 0.5
                    continue
            cand_block = _signature_block(candidate)
            cand_wu = input_block_for(cand_block)
            cand_objective, cand_residual = objective_for(cand_block, cand_wu)
            if cand_objective < objective:
                Q, block, wu = candidate, cand_block, cand_wu
                previous = objective
                objective, residual = cand_objective, cand_residual
                history.append(objective)
                accepted = True
                if previous - objective < opts.tol * max(previous, 1e-300):
                    converged = True
                break
            step *= 0.5
        if not accepted:
            # No descent direction at working precision: we are at a minimizer.
            converged = True
            history.append(objective)
            break
        if converged:
            break

    directions = np.hstack([block, wu])
    return IsolationModel(
        directions=directions,
        objective=objective,
        iterations=iterations,
        converged=converged,
        objective_history=tuple(history),
    )


def directional_residual(z, model: IsolationModel) -> np.ndarray:
    """Residual vector of one sample: directions @ z."""
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n,):
        raise ValueError(f"sample has shape {z.shape}, expected ({model.n},)")
    return model.directions @ z


def angular_distances(residual, model: IsolationModel) -> np.ndarray:
    """Angle in degrees between the residual and each fault signature.

    Angles are folded into [0, 90] (sign of the fault does not change its
    signature). A residual with norm below 1e-12 carries no directional
    evidence and maps to 90 degrees everywhere.
    """
    r = np.asarray(residual, dtype=float)
    n_x = model.n_x
    if r.shape != (n_x,):
        raise ValueError(f"residual has shape {r.shape}, expected ({n_x},)")
    norm = np.linalg.norm(r)
    if norm < 1e-12:
        return np.full(n_x, 90.0)
    unit_res = r / norm
    unit_sig = model.unit_signatures
    cos = unit_res @ unit_sig
    # atan2 of the orthogonal-component norm against |cos| is far more
    # accurate than arccos for near-parallel vectors.
    ortho = unit_res[:, np.newaxis] - unit_sig * cos[np.newaxis, :]
    sin = np.linalg.norm(ortho, axis=0)
    return np.degrees(np.arctan2(sin, np.abs(cos)))
