"""Per-stage QSI-aware interference game: water-filling best response and QSIWFA."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

LN2 = float(np.log(2.0))

# Received-power cap; numerical guard for degenerate multipliers or
# non-contracting instances.
DEFAULT_P_MAX = 1e6


@dataclass
class GameInstance:
    """One slot of the power game over all active clusters.

    ``numerators`` carry (tau * BW / N_bar) * dV per user; the 1/ln2 from the
    bit-rate derivative is applied inside the water level so the operator is
    the exact minimizer of the per-stage cost.
    """

    coupling: np.ndarray  # S, (U, U)
    numerators: np.ndarray  # (U,)
    denominators: np.ndarray  # sum_b' gamma_b' ||w||^2, (U,)
    weights: np.ndarray | None = None  # u > 0 for the weighted max norm
    p_max: float = DEFAULT_P_MAX

    def __post_init__(self) -> None:
        self.numerators = np.asarray(self.numerators, dtype=float)
        self.denominators = np.asarray(self.denominators, dtype=float)
        if self.weights is None:
            self.weights = np.ones_like(self.numerators)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValueError("norm weights must be positive")

    @property
    def num_users(self) -> int:
        return self.numerators.size

    def water_levels(self) -> np.ndarray:
        """Per-user water level; degenerate (zero) multipliers fall back to p_max."""
        wl = np.zeros(self.num_users)
        pos = self.denominators > 0
        wl[pos] = self.numerators[pos] / (LN2 * self.denominators[pos])
        degenerate = ~pos & (self.numerators > 0)
        if np.any(degenerate):
            log.debug(
                "degenerate multipliers for %d users; allocating the power cap",
                int(degenerate.sum()),
            )
            wl[degenerate] = np.inf
        return wl


def waterfill_best_response(instance: GameInstance, p_others: np.ndarray) -> np.ndarray:
    """p = (water_level - (1 + S p_others))^+ per user, capped at p_max."""
    p_others = np.asarray(p_others, dtype=float)
    if np.any(p_others < 0):
        raise ValueError("powers must be nonnegative")
    interference = instance.coupling @ p_others
    p = instance.water_levels() - (1.0 + interference)
    return np.clip(p, 0.0, instance.p_max)


def weighted_max_norm(S: np.ndarray, u: np.ndarray) -> float:
    """max over rows of (1/u_row) sum_col S[row, col] * u_col."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("weights must be positive")
    return float(np.max((np.asarray(S) @ u) / u))


def weighted_sup(x: np.ndarray, u: np.ndarray) -> float:
    return float(np.max(np.abs(x) / u))


@dataclass
class QsiwfaResult:
    p: np.ndarray
    iterations: int
    converged: bool
    residual: float


def qsiwfa(
    instance: GameInstance,
    p_init: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> QsiwfaResult:
    """Simultaneous best-response iteration toward the fixed point p = WF(p)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = (
        np.zeros(instance.num_users)
        if p_init is None
        else np.asarray(p_init, dtype=float).copy()
    )
    u = instance.weights
    for it in range(1, max_iter + 1):
        p_next = waterfill_best_response(instance, p)
        change = weighted_sup(p_next - p, u)
        p = p_next
        if change < tol:
            residual = weighted_sup(waterfill_best_response(instance, p) - p, u)
            return QsiwfaResult(p=p, iterations=it, converged=True, residual=residual)
    residual = weighted_sup(waterfill_best_response(instance, p) - p, u)
    return QsiwfaResult(p=p, iterations=max_iter, converged=False, residual=residual)


@dataclass
class ContractionReport:
    modulus: float
    satisfied: bool


def contraction_report(instance: GameInstance) -> ContractionReport:
    """Sufficient condition ||S||_inf,mat^u < 1 for WF to contract; logged per slot."""
    alpha = weighted_max_norm(instance.coupling, instance.weights)
    return ContractionReport(modulus=alpha, satisfied=bool(alpha < 1.0))
