"""Exact brute-force references on tiny instances: per-user and joint relative
value iteration over quantized CSI, plus certification of learned tables."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .channel import CsiCodebook, enumerate_joint_states
from .control import PotentialStore
from .game import LN2

RVI_TOL = 1e-12
RVI_MAX_SWEEPS = 100_000
JOINT_STATE_GUARD = 10_000
SINGULAR_COND = 1e12


class OracleDivergence(RuntimeError):
    pass


@dataclass
class TinyInstance:
    """A single isolated cluster small enough for exact dynamic programming.

    The codebook quantizes the normalized fading g; channels are sqrt(sigma)*g.
    ``drain`` is BW*tau/N_bar per user, so the departure probability is
    drain * log2(1 + SINR).
    """

    sigma: np.ndarray  # (num_users, num_bs) path gains
    antennas: int
    capacity: int  # N_Q
    arrival_prob: np.ndarray  # lambda*tau per user
    drain: np.ndarray  # BW*tau/N_bar per user
    beta: np.ndarray  # cost weights per user
    gamma: np.ndarray  # LM per BS
    power_budget: np.ndarray  # P_bar per BS
    codebook: CsiCodebook
    utility: str = "delay"  # "delay": f(Q)=Q/(lambda*tau); "outage": 1[Q >= threshold]
    outage_threshold: int = 1
    p_max: float = 1e6
    include_budget_constant: bool = True

    def __post_init__(self) -> None:
        self.sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        for name in ("arrival_prob", "drain", "beta"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        for name in ("gamma", "power_budget"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))

    @property
    def num_users(self) -> int:
        return self.sigma.shape[0]

    @property
    def num_bs(self) -> int:
        return self.sigma.shape[1]

    def utility_values(self, user: int) -> np.ndarray:
        q = np.arange(self.capacity + 1, dtype=float)
        if self.utility == "delay":
            return q / self.arrival_prob[user]
        if self.utility == "outage":
            return (q >= self.outage_threshold).astype(float)
        raise ValueError(f"unknown utility {self.utility!r}")

    def budget_constant(self) -> float:
        """Per-user share of the -gamma_b * P_bar_b term of the per-stage cost."""
        if not self.include_budget_constant:
            return 0.0
        return -float(np.sum(self.gamma * self.power_budget)) / self.num_users

    @classmethod
    def from_dict(cls, d: dict) -> "TinyInstance":
        cb = CsiCodebook(
            levels=np.asarray(d["codebook_levels"], dtype=float),
            probs=np.asarray(d["codebook_probs"], dtype=float)
            if "codebook_probs" in d
            else None,
        )
        return cls(
            sigma=np.asarray(d["sigma"], dtype=float),
            antennas=int(d["antennas"]),
            capacity=int(d["capacity"]),
            arrival_prob=np.asarray(d["arrival_prob"], dtype=float),
            drain=np.asarray(d["drain"], dtype=float),
            beta=np.asarray(d["beta"], dtype=float),
            gamma=np.asarray(d["gamma"], dtype=float),
            power_budget=np.asarray(d["power_budget"], dtype=float),
            codebook=cb,
            utility=d.get("utility", "delay"),
            outage_threshold=int(d.get("outage_threshold", 1)),
            include_budget_constant=bool(d.get("include_budget_constant", True)),
            p_max=float(d.get("p_max", 1e6)),
        )

    @classmethod
    def from_json(cls, s: str) -> "TinyInstance":
        return cls.from_dict(json.loads(s))


@dataclass
class CsiEnsemble:
    """ZF quantities for every joint quantized CSI state of the cluster.

    Singular states carry zero precoders and are served with zero power.
    """

    probs: np.ndarray  # (S,)
    denom: np.ndarray  # (S, U) sum_b gamma_b ||w_u,b||^2
    norms: np.ndarray  # (S, U, B) ||w_u,b||^2
    singular: np.ndarray  # (S,) bool


def build_csi_ensemble(instance: TinyInstance) -> CsiEnsemble:
    U, B, Nt = instance.num_users, instance.num_bs, instance.antennas
    num_scalars = U * B * Nt
    probs, denoms, norms, singular = [], [], [], []
    for prob, vec in enumerate_joint_states(
        num_scalars, instance.codebook, guard=JOINT_STATE_GUARD
    ):
        g = vec.reshape(U, B, Nt)
        h = np.sqrt(instance.sigma)[:, :, None] * g
        H = h.reshape(U, B * Nt)
        gram = H @ H.conj().T
        probs.append(prob)
        if np.linalg.cond(gram) > SINGULAR_COND:
            singular.append(True)
            denoms.append(np.zeros(U))
            norms.append(np.zeros((U, B)))
            continue
        W = H.conj().T @ np.linalg.inv(gram)  # (B*Nt, U)
        w = W.T.reshape(U, B, Nt)
        n2 = np.sum(np.abs(w) ** 2, axis=-1)  # (U, B)
        singular.append(False)
        norms.append(n2)
        denoms.append(n2 @ instance.gamma)
    return CsiEnsemble(
        probs=np.asarray(probs),
        denom=np.asarray(denoms),
        norms=np.asarray(norms),
        singular=np.asarray(singular),
    )


def closed_form_power(
    numerator: float, denominator: float, interference: float = 0.0, p_max: float = 1e6
) -> float:
    """Analytic minimizer of p*denominator - numerator*log2(1+p/(1+I))."""
    if denominator <= 0:
        return p_max if numerator > 0 else 0.0
    p = numerator / (LN2 * denominator) - (1.0 + interference)
    return float(np.clip(p, 0.0, p_max))


def power_grid(p_max: float, num_levels: int = 64) -> np.ndarray:
    """Zero plus log-spaced levels for the grid-search cross-check."""
    return np.concatenate([[0.0], np.logspace(-4, np.log10(p_max), num_levels)])


def grid_search_power(
    numerator: float,
    denominator: float,
    interference: float,
    grid: np.ndarray,
) -> float:
    costs = grid * denominator - numerator * np.log2(1.0 + grid / (1.0 + interference))
    return float(grid[int(np.argmin(costs))])


def _stage_quantities(
    instance: TinyInstance, ens: CsiEnsemble, user: int, dv: float
) -> tuple[float, float]:
    """(expected power cost, expected departure probability) at potential increment dv.

    The per-state service probability is capped at 1 - lambda*tau so the
    birth-death kernel stays a valid one-event-per-slot chain; the online
    simulator applies the identical cap.
    """
    active = ~ens.singular
    D = ens.denom[active, user]
    probs = ens.probs[active]
    numer = instance.drain[user] * dv
    p = np.where(
        D > 0,
        np.clip(numer / (LN2 * np.maximum(D, 1e-300)) - 1.0, 0.0, instance.p_max),
        np.where(numer > 0, instance.p_max, 0.0),
    )
    power_cost = float(np.sum(probs * p * D))
    cap = 1.0 - float(instance.arrival_prob[user])
    mu_states = np.minimum(instance.drain[user] * np.log2(1.0 + p), cap)
    mu_tau = float(np.sum(probs * mu_states))
    return power_cost, mu_tau


@dataclass
class OracleSolution:
    values: np.ndarray  # V over queue states (per-user) or flat joint grid
    theta: float
    mu_tau: np.ndarray  # expected departure probability per state under the policy
    residual: np.ndarray
    sweeps: int


def per_user_rvi(
    instance: TinyInstance, user: int, ensemble: CsiEnsemble | None = None
) -> OracleSolution:
    """Relative value iteration on the single-user birth-death MDP, exact CSI expectation."""
    ens = ensemble if ensemble is not None else build_csi_ensemble(instance)
    NQ = instance.capacity
    lam = float(instance.arrival_prob[user])
    f = instance.utility_values(user)
    const = instance.budget_constant()
    beta = float(instance.beta[user])

    def bellman(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        TV = np.empty(NQ + 1)
        mts = np.empty(NQ + 1)
        for Q in range(NQ + 1):
            dv = V[Q] - V[Q - 1] if Q > 0 else 0.0
            power_cost, mu_tau = _stage_quantities(instance, ens, user, dv)
            if Q == 0:
                power_cost, mu_tau = 0.0, 0.0
            if lam + mu_tau > 1.0:
                raise OracleDivergence(
                    f"lambda*tau + mu*tau = {lam + mu_tau:.3f} > 1 at Q={Q}; "
                    "instance violates the slow-slot assumption"
                )
            up = V[min(Q + 1, NQ)]
            down = V[max(Q - 1, 0)]
            TV[Q] = (
                beta * f[Q]
                + const
                + power_cost
                + lam * up
                + mu_tau * down
                + (1.0 - lam - mu_tau) * V[Q]
            )
            mts[Q] = mu_tau
        return TV, mts

    V = np.zeros(NQ + 1)
    theta = 0.0
    for sweep in range(1, RVI_MAX_SWEEPS + 1):
        TV, mts = bellman(V)
        theta_new = TV[0]
        V_new = TV - theta_new
        if np.max(np.abs(V_new - V)) < RVI_TOL and abs(theta_new - theta) < RVI_TOL:
            V, theta = V_new, theta_new
            break
        V, theta = V_new, theta_new
    else:
        raise OracleDivergence(f"per-user RVI did not converge in {RVI_MAX_SWEEPS} sweeps")
    TV, mts = bellman(V)
    residual = np.abs(TV - theta - V)
    return OracleSolution(values=V, theta=theta, mu_tau=mts, residual=residual, sweeps=sweep)


def _joint_states(num_users: int, capacity: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(capacity + 1), repeat=num_users))


def joint_rvi(instance: TinyInstance, ensemble: CsiEnsemble | None = None) -> OracleSolution:
    """Relative value iteration over the joint CQSI grid of the cluster."""
    ens = ensemble if ensemble is not None else build_csi_ensemble(instance)
    U, NQ = instance.num_users, instance.capacity
    states = _joint_states(U, NQ)
    n_csi = ens.probs.size
    if len(states) * n_csi > JOINT_STATE_GUARD:
        raise OracleDivergence(
            f"joint state space {len(states)} x {n_csi} CSI exceeds guard {JOINT_STATE_GUARD}"
        )
    index = {s: i for i, s in enumerate(states)}
    lam = instance.arrival_prob
    futil = [instance.utility_values(u) for u in range(U)]
    const = U * instance.budget_constant()

    def bellman(V: np.ndarray) -> np.ndarray:
        # users evolve independently within a slot: joint kernel is the product
        # of the per-user birth-death kernels
        TV = np.empty(len(states))
        for i, s in enumerate(states):
            total_cost = const
            dists = []
            for u in range(U):
                Q = s[u]
                dv = V[i] - V[index[s[:u] + (Q - 1,) + s[u + 1 :]]] if Q > 0 else 0.0
                power_cost, mu_tau = _stage_quantities(instance, ens, u, dv)
                if Q == 0:
                    power_cost, mu_tau = 0.0, 0.0
                total_cost += float(instance.beta[u]) * futil[u][Q] + power_cost
                dists.append(
                    [
                        (lam[u], min(Q + 1, NQ)),
                        (mu_tau, max(Q - 1, 0)),
                        (1.0 - lam[u] - mu_tau, Q),
                    ]
                )
            flow = 0.0
            for combo in itertools.product(*dists):
                prob = 1.0
                nxt = []
                for p, q_next in combo:
                    prob *= p
                    nxt.append(q_next)
                if prob > 0.0:
                    flow += prob * V[index[tuple(nxt)]]
            TV[i] = total_cost + flow
        return TV

    V = np.zeros(len(states))
    theta = 0.0
    ref = index[(0,) * U]
    for sweep in range(1, RVI_MAX_SWEEPS + 1):
        TV = bellman(V)
        theta_new = TV[ref]
        V_new = TV - theta_new
        if np.max(np.abs(V_new - V)) < RVI_TOL and abs(theta_new - theta) < RVI_TOL:
            V, theta = V_new, theta_new
            break
        V, theta = V_new, theta_new
    else:
        raise OracleDivergence(f"joint RVI did not converge in {RVI_MAX_SWEEPS} sweeps")
    TV = bellman(V)
    residual = np.abs(TV - theta - V)
    return OracleSolution(
        values=V, theta=theta, mu_tau=np.zeros(0), residual=residual, sweeps=sweep
    )


def joint_states(instance: TinyInstance) -> list[tuple[int, ...]]:
    return _joint_states(instance.num_users, instance.capacity)


def bellman_residual(
    store: PotentialStore,
    instance: TinyInstance,
    cluster: tuple[int, ...] | None = None,
    ensemble: CsiEnsemble | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """Per-user fixed-point residuals of the interpolated learned tables."""
    ens = ensemble if ensemble is not None else build_csi_ensemble(instance)
    if cluster is None:
        cluster = tuple(range(instance.num_bs))
    K = store.users_per_cell
    out = {}
    for u in range(instance.num_users):
        b, k = divmod(u, K)
        V = np.array(
            [store.lookup(cluster, (b, k), Q) for Q in range(instance.capacity + 1)]
        )
        lam = float(instance.arrival_prob[u])
        f = instance.utility_values(u)
        beta = float(instance.beta[u])
        const = instance.budget_constant()
        NQ = instance.capacity
        TV = np.empty(NQ + 1)
        for Q in range(NQ + 1):
            dv = V[Q] - V[Q - 1] if Q > 0 else 0.0
            power_cost, mu_tau = _stage_quantities(instance, ens, u, dv)
            if Q == 0:
                power_cost, mu_tau = 0.0, 0.0
            TV[Q] = (
                beta * f[Q]
                + const
                + power_cost
                + lam * V[min(Q + 1, NQ)]
                + mu_tau * V[max(Q - 1, 0)]
                + (1.0 - lam - mu_tau) * V[Q]
            )
        theta_hat = TV[0] - V[0]
        out[(b, k)] = np.abs(TV - theta_hat - V)
    return out
