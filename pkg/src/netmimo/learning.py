"""Two-timescale online stochastic approximation: fast potential-table updates
at the cluster managers, slow Lagrange-multiplier updates at the BSs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import channel as chan
from . import phy
from .config import SimConfig, utility_values
from .control import (
    LagrangeMultipliers,
    PatternSelector,
    PotentialStore,
    project_lm,
)
from .game import GameInstance, contraction_report, qsiwfa
from .queueing import QueueState, step_queue_packets_from_uniforms
from .topology import NetworkTopology, PatternCatalog

log = logging.getLogger(__name__)

MAX_SINGULAR_RESAMPLES = 32


@dataclass
class StepSizeSchedule:
    """Power-law steps: fast per-table-entry visits, slow global slot clock.

    0.5 < exponent_v < exponent_gamma <= 1 gives square-summable, non-summable
    sequences with eps_gamma / eps_v -> 0.
    """

    exponent_v: float = 0.6
    scale_v: float = 1.0
    exponent_gamma: float = 0.9
    scale_gamma: float = 0.05

    def __post_init__(self) -> None:
        if not 0.5 < self.exponent_v < self.exponent_gamma <= 1.0:
            raise ValueError("need 0.5 < exponent_v < exponent_gamma <= 1")

    def eps_v(self, visit_count: int) -> float:
        return self.scale_v / (visit_count + 1) ** self.exponent_v

    def eps_gamma(self, slot: int) -> float:
        return self.scale_gamma / (slot + 1) ** self.exponent_gamma


def step_sizes(
    schedule: StepSizeSchedule, visit_count: int, slot: int
) -> tuple[float, float]:
    return schedule.eps_v(visit_count), schedule.eps_gamma(slot)


@dataclass
class LearningObservation:
    """One potential-update sample for a (cluster, user) table at an anchor state."""

    slot: int
    cluster: tuple[int, ...]
    user: tuple[int, int]
    queue: int  # Q(t), must be at an anchor Q = q*d
    cost_sample: float  # g_{n,(b,k)} at slot t
    mu_tau: float  # model departure probability from the allocated rate
    arrival: bool  # realized event Q(t+1) = Q(t)+1
    ref_cost: float  # virtual cost at the empty queue (zero power, utility only)
    ref_arrival: bool  # this slot's raw arrival draw, a valid reference sample


def update_potential(
    store: PotentialStore,
    obs: LearningObservation,
    schedule: StepSizeSchedule,
    visit_counts: dict,
) -> None:
    """Table update with reference-state differencing; fires only at anchors."""
    d = store.resolution
    lq = store.lq
    q, rem = divmod(obs.queue, d)
    if rem != 0 or q > lq:
        raise ValueError(f"update fired off-anchor: Q={obs.queue}, d={d}")
    v = store.table(obs.cluster, obs.user)
    y_main = (
        obs.cost_sample
        + obs.mu_tau * (v[max(q - 1, 0)] - v[q]) / d
        + (1.0 if obs.arrival else 0.0) * (v[min(q + 1, lq)] - v[q]) / d
    )
    y_ref = obs.ref_cost + (1.0 if obs.ref_arrival else 0.0) * (
        v[min(1, lq)] - v[0]
    ) / d
    key = (obs.cluster, obs.user, q)
    count = visit_counts.get(key, 0)
    v[q] += schedule.eps_v(count) * (y_main - y_ref)
    visit_counts[key] = count + 1
    v[0] = 0.0  # re-pin the reference state


def update_lm(
    lms: LagrangeMultipliers,
    per_bs_power: np.ndarray,
    power_budget: np.ndarray,
    eps_gamma: float,
) -> None:
    if eps_gamma < 0:
        raise ValueError("eps_gamma must be nonnegative")
    lms.gamma = project_lm(
        lms.gamma + eps_gamma * (np.asarray(per_bs_power) - np.asarray(power_budget)),
        lms.bound,
    )


@dataclass
class EpisodeTrace:
    """Per-slot time series of one learning episode."""

    queue_mean: np.ndarray
    per_bs_power: np.ndarray  # (T, B)
    gamma: np.ndarray  # (T, B)
    pattern_id: np.ndarray
    contraction_modulus: np.ndarray
    contraction_satisfied: np.ndarray
    qsiwfa_iterations: np.ndarray
    drops: np.ndarray
    queues: np.ndarray  # (T, U) queue state at slot start
    rates: np.ndarray  # (T, U)


def _sample_nonsingular(topology, pattern, seed, slot):
    for draw in range(MAX_SINGULAR_RESAMPLES):
        state = chan.sample_channel(topology, slot, seed, draw)
        try:
            return state, phy.compute_zf_precoders(state, pattern, topology)
        except phy.SingularChannelError:
            continue
    raise phy.SingularChannelError(
        f"no nonsingular channel draw after {MAX_SINGULAR_RESAMPLES} tries at slot {slot}"
    )


def _sample_quantized(topology, pattern, seed, slot, codebook):
    """Quantized-CSI slot: no resampling; a singular joint state is served with
    zero power, mirroring the exact-reference convention."""
    state = chan.sample_channel(topology, slot, seed)
    sigma = topology.gains_flat()[:, :, None]
    g = state.h / np.sqrt(sigma)
    g_hat = chan.dequantize(chan.quantize_channel(chan.ChannelState(g, slot), codebook), codebook)
    state = chan.ChannelState(h=np.sqrt(sigma) * g_hat, slot_index=slot)
    try:
        return state, phy.compute_zf_precoders(state, pattern, topology)
    except phy.SingularChannelError:
        U, B, Nt = state.h.shape
        return state, phy.PrecoderSet(w=np.zeros((U, B, Nt), dtype=complex), pattern=pattern)


@dataclass
class ClusterEpisodeResult:
    values: np.ndarray  # (U, l_q + 1) learned tables
    gamma: np.ndarray  # (B,) final multipliers
    gamma_trace: np.ndarray  # (T, B)
    per_bs_power: np.ndarray  # (T, B)
    queues: np.ndarray  # (T, U)


def run_isolated_cluster_episode(
    instance,
    slots: int,
    seed: int = 0,
    resolution: int = 1,
    schedule: StepSizeSchedule | None = None,
    gamma_init: np.ndarray | None = None,
    learn_gamma: bool = True,
) -> ClusterEpisodeResult:
    """Online learning on a single isolated cluster with quantized CSI.

    Specialized fast path over a precomputed CSI ensemble; dynamics match the
    generic episode loop restricted to one cluster (no inter-cluster
    interference, closed-form best response instead of iteration).
    ``instance`` supplies sigma, codebook, traffic and cost parameters.
    """
    from .oracle import build_csi_ensemble

    ens = build_csi_ensemble(instance)
    U, B = instance.num_users, instance.num_bs
    NQ = instance.capacity
    d = resolution
    lq = NQ // d
    if schedule is None:
        schedule = StepSizeSchedule()
    lam = instance.arrival_prob.copy()
    drain = instance.drain.copy()
    beta = instance.beta.copy()
    futil = np.stack([instance.utility_values(u) for u in range(U)])
    budget = instance.power_budget.copy()
    gamma = (
        instance.gamma.astype(float).copy()
        if gamma_init is None
        else np.asarray(gamma_init, dtype=float).copy()
    )
    p_max = instance.p_max
    bound = 100.0

    cum = np.cumsum(ens.probs)
    norms = ens.norms  # (S, U, B)
    singular = ens.singular

    V = np.zeros((U, lq + 1))
    counts = np.zeros((U, lq + 1), dtype=np.int64)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7469]))
    queue = np.zeros(U, dtype=np.int64)

    gamma_trace = np.zeros((slots, B))
    power_trace = np.zeros((slots, B))
    queue_trace = np.zeros((slots, U), dtype=np.int64)

    ln2 = float(np.log(2.0))
    for t in range(slots):
        u_arr = rng.random(U)
        u_dep = rng.random(U)
        s = int(np.searchsorted(cum, rng.random(), side="right"))
        s = min(s, cum.size - 1)
        arrivals = (u_arr < lam).astype(np.int64)

        # interpolated increment V(Q) - V(Q-1) at the current queue
        qd, rem = np.divmod(queue, d)
        hi = np.minimum(qd + 1, lq)
        vq = V[np.arange(U), np.minimum(qd, lq)]
        vhi = V[np.arange(U), hi]
        dv = np.where(
            queue == 0,
            0.0,
            np.where(
                rem > 0,
                (vhi - vq) / d,
                (vq - V[np.arange(U), np.maximum(qd - 1, 0)]) / d,
            ),
        )
        if singular[s]:
            p = np.zeros(U)
            denom = np.zeros(U)
        else:
            denom = norms[s] @ gamma
            num = drain * dv
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.where(
                    denom > 0,
                    np.clip(num / (ln2 * denom) - 1.0, 0.0, p_max),
                    np.where(num > 0, p_max, 0.0),
                )
        rates = np.log2(1.0 + p)
        mu = np.minimum(drain * rates, 1.0 - lam)
        per_bs = norms[s].T @ p if not singular[s] else np.zeros(B)
        cost = beta * futil[np.arange(U), queue] + p * denom

        thresh = mu / (1.0 - lam)
        departures = (arrivals == 0) & (u_dep < thresh) & (queue > 0)
        new_queue = np.minimum(queue - departures + arrivals, NQ)
        arrived = new_queue == queue + 1

        for u in range(U):
            Q = int(queue[u])
            q, r = divmod(Q, d)
            if r == 0 and q <= lq:
                y_main = (
                    cost[u]
                    + mu[u] * (V[u, max(q - 1, 0)] - V[u, q]) / d
                    + (1.0 if arrived[u] else 0.0) * (V[u, min(q + 1, lq)] - V[u, q]) / d
                )
                # reference stage at the empty queue, evaluated virtually: zero
                # power is allocated there, and the arrival draw of this slot is
                # a valid state-independent sample
                y_ref = beta[u] * futil[u, 0] + arrivals[u] * (
                    V[u, min(1, lq)] - V[u, 0]
                ) / d
                V[u, q] += schedule.eps_v(int(counts[u, q])) * (y_main - y_ref)
                counts[u, q] += 1
                V[u, 0] = 0.0

        if learn_gamma:
            gamma = np.clip(
                gamma + schedule.eps_gamma(t) * (per_bs - budget), 0.0, bound
            )

        gamma_trace[t] = gamma
        power_trace[t] = per_bs
        queue_trace[t] = queue
        queue = new_queue

    return ClusterEpisodeResult(
        values=V,
        gamma=gamma,
        gamma_trace=gamma_trace,
        per_bs_power=power_trace,
        queues=queue_trace,
    )


def run_learning_episode(
    config: SimConfig,
    topology: NetworkTopology,
    catalog: PatternCatalog,
    store: PotentialStore | None = None,
    lms: LagrangeMultipliers | None = None,
) -> tuple[PotentialStore, LagrangeMultipliers, EpisodeTrace]:
    """Slot loop of the online primal-dual algorithm: pattern selection on GQSI,
    per-cluster water-filling power game, potential and multiplier updates."""
    U = topology.num_users
    B = topology.num_cells
    K = topology.users_per_cell
    T = config.slots
    if store is None:
        store = PotentialStore(
            clusters=catalog.all_clusters,
            users_per_cell=K,
            capacity=config.capacity,
            resolution=config.resolution,
        )
    if lms is None:
        lms = LagrangeMultipliers(
            gamma=np.full(B, config.gamma_init), bound=config.gamma_bound
        )
    selector = PatternSelector(store, catalog)
    schedule = StepSizeSchedule(
        exponent_v=config.exponent_v,
        scale_v=config.scale_v,
        exponent_gamma=config.exponent_gamma,
        scale_gamma=config.scale_gamma,
    )
    visit_counts: dict = {}
    codebook = (
        chan.CsiCodebook(levels=np.asarray(config.csi_levels, dtype=float))
        if config.csi_levels is not None
        else None
    )

    futil = utility_values(
        config.utility, config.capacity, config.arrival_prob, config.outage_threshold
    )
    drain = config.drain
    lam = np.full(U, config.arrival_prob)
    budget = np.full(B, config.power_budget)
    queue = QueueState(np.zeros(U, dtype=np.int64), config.capacity)

    tr = EpisodeTrace(
        queue_mean=np.zeros(T),
        per_bs_power=np.zeros((T, B)),
        gamma=np.zeros((T, B)),
        pattern_id=np.zeros(T, dtype=int),
        contraction_modulus=np.zeros(T),
        contraction_satisfied=np.zeros(T, dtype=bool),
        qsiwfa_iterations=np.zeros(T, dtype=int),
        drops=np.zeros(T, dtype=int),
        queues=np.zeros((T, U), dtype=np.int64),
        rates=np.zeros((T, U)),
    )

    for t in range(T):
        rng_t = chan.traffic_rng(config.seed, t)
        u_arr = rng_t.random(U)
        u_dep = rng_t.random(U)
        arrivals = (u_arr < lam).astype(np.int64)

        pattern = selector.select(queue.q)
        if codebook is None:
            state, precoders = _sample_nonsingular(topology, pattern, config.seed, t)
        else:
            state, precoders = _sample_quantized(
                topology, pattern, config.seed, t, codebook
            )
        norms = precoders.norms_sq()  # (U, B)
        S = phy.build_coupling_matrix(state, precoders, topology)

        cluster_of = [pattern.cluster_of(b) for b in range(B)]
        numerators = np.empty(U)
        for u in range(U):
            b, k = topology.user_pair(u)
            numerators[u] = drain * store.delta(cluster_of[b], (b, k), int(queue.q[u]))
        denominators = norms @ lms.gamma
        # users with a zero precoder (singular quantized state) get zero power
        numerators[norms.sum(axis=1) == 0.0] = 0.0

        instance = GameInstance(
            coupling=S,
            numerators=numerators,
            denominators=denominators,
            p_max=config.p_max,
        )
        result = qsiwfa(
            instance, tol=config.qsiwfa_tol, max_iter=config.qsiwfa_max_iter
        )
        p = result.p
        report = contraction_report(instance)

        interference = S @ p
        rates = phy.rate(p, interference)
        # one event per slot: service probability cannot exceed 1 - lambda*tau
        mu_tau = np.clip(rates * drain, 0.0, 1.0 - lam)
        per_bs = phy.per_bs_power(precoders, p, topology)

        new_queue, drops = step_queue_packets_from_uniforms(
            queue, mu_tau, arrivals, u_dep, lam
        )
        realized_arrival = new_queue.q == queue.q + 1

        # Potential updates for every user of every active cluster (all clusters
        # are active under a full partition).
        costs = np.empty(U)
        for u in range(U):
            costs[u] = config.beta * futil[int(queue.q[u])] + p[u] * denominators[u]
        for u in range(U):
            b, k = topology.user_pair(u)
            cluster = cluster_of[b]
            key = (cluster, (b, k))
            Q = int(queue.q[u])
            if Q % store.resolution == 0:
                # Reference stage at the empty queue, evaluated virtually: zero
                # power is allocated there, so the cost is the deterministic
                # utility term, and this slot's arrival draw is a valid
                # state-independent sample of the reference arrival.
                obs = LearningObservation(
                    slot=t,
                    cluster=cluster,
                    user=(b, k),
                    queue=Q,
                    cost_sample=float(costs[u]),
                    mu_tau=float(mu_tau[u]),
                    arrival=bool(realized_arrival[u]),
                    ref_cost=config.beta * float(futil[0]),
                    ref_arrival=bool(arrivals[u]),
                )
                update_potential(store, obs, schedule, visit_counts)

        update_lm(lms, per_bs, budget, schedule.eps_gamma(t))

        tr.queue_mean[t] = float(queue.q.mean())
        tr.per_bs_power[t] = per_bs
        tr.gamma[t] = lms.gamma
        tr.pattern_id[t] = pattern.pattern_id
        tr.contraction_modulus[t] = report.modulus
        tr.contraction_satisfied[t] = report.satisfied
        tr.qsiwfa_iterations[t] = result.iterations
        tr.drops[t] = drops
        tr.queues[t] = queue.q
        tr.rates[t] = rates
        queue = new_queue

    return store, lms, tr
