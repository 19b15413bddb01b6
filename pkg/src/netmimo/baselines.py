"""CSI-only baseline schemes: reuse-7 FCA, static clustering and greedy
dynamic clustering.  All three ignore the queues when allocating power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import phy
from .channel import ChannelState
from .topology import ClusteringPattern, ConfigurationError, NetworkTopology, PatternCatalog


@dataclass
class BaselineAllocation:
    """Outcome of one slot of a baseline scheme."""

    pattern: ClusteringPattern
    precoders: phy.PrecoderSet
    p: np.ndarray  # received power per user
    rates: np.ndarray  # bit/s/Hz on the band the user actually occupies
    bandwidth_fraction: np.ndarray  # share of the system band per user
    per_bs_power: np.ndarray


def reuse7_colors(axial_coords: np.ndarray) -> np.ndarray:
    """Classic reuse-7 coloring of the hex lattice: c = (2q + 3r) mod 7."""
    ax = np.asarray(axial_coords, dtype=int)
    return (2 * ax[:, 0] + 3 * ax[:, 1]) % 7


def waterfill_sum_rate(costs: np.ndarray, total_power: float) -> np.ndarray:
    """Maximize sum log2(1 + p_u) subject to sum costs_u * p_u <= total_power.

    ``costs`` is the transmit power needed per unit received power.  Closed
    form over the active set: p_u = (nu / c_u - 1)^+ with the level nu set by
    the budget.
    """
    c = np.asarray(costs, dtype=float)
    if np.any(c <= 0):
        raise ValueError("power costs must be positive")
    if total_power < 0:
        raise ValueError("total power must be nonnegative")
    order = np.argsort(c)
    p = np.zeros_like(c)
    # Try active sets from cheapest users down; the level must exceed the
    # costliest active user's cost.
    for m in range(c.size, 0, -1):
        active = order[:m]
        nu = (total_power + c[active].sum()) / m
        if nu >= c[active].max():
            p[active] = nu / c[active] - 1.0
            return p
    return p


def _cluster_users(cluster: tuple[int, ...], K: int) -> list[int]:
    return [b * K + k for b in cluster for k in range(K)]


def _allocate_clustered(
    topology: NetworkTopology,
    state: ChannelState,
    pattern: ClusteringPattern,
    power_budget: float,
) -> tuple[phy.PrecoderSet, np.ndarray]:
    """Per-cluster sum-rate water-filling on a cluster-total budget, then a
    uniform scale-down within any cluster whose per-BS powers overshoot."""
    K = topology.users_per_cell
    precoders = phy.compute_zf_precoders(state, pattern, topology)
    norms = precoders.norms_sq()  # (U, B)
    p = np.zeros(topology.num_users)
    for cluster in pattern.clusters:
        users = _cluster_users(cluster, K)
        cols = list(cluster)
        costs = norms[np.ix_(users, cols)].sum(axis=1)
        p_cluster = waterfill_sum_rate(costs, power_budget * len(cluster))
        per_bs = norms[np.ix_(users, cols)].T @ p_cluster
        worst = per_bs.max()
        if worst > power_budget:
            p_cluster *= power_budget / worst
        p[users] = p_cluster
    return precoders, p


def fca_allocate(
    topology: NetworkTopology,
    state: ChannelState,
    power_budget: float,
) -> BaselineAllocation:
    """Reuse-7 orthogonal bands, single-cell ZF, per-cell water-filling.

    Cells of the same color share a band; with one ring every color is unique
    and there is no co-channel interference.  Each user sees 1/7 of the band.
    """
    B = topology.num_cells
    singletons = ClusteringPattern(tuple((b,) for b in range(B)), 0)
    precoders, p = _allocate_clustered(topology, state, singletons, power_budget)

    colors = reuse7_colors(topology.axial_coords)
    S = phy.build_coupling_matrix(state, precoders, topology)
    K = topology.users_per_cell
    user_color = np.repeat(colors, K)
    # Only co-channel cells interfere.
    S = S * (user_color[:, None] == user_color[None, :])
    interference = S @ p
    rates = phy.rate(p, interference)
    return BaselineAllocation(
        pattern=singletons,
        precoders=precoders,
        p=p,
        rates=rates,
        bandwidth_fraction=np.full(topology.num_users, 1.0 / 7.0),
        per_bs_power=phy.per_bs_power(precoders, p, topology),
    )


def static_cluster_allocate(
    topology: NetworkTopology,
    state: ChannelState,
    pattern: ClusteringPattern,
    power_budget: float,
) -> BaselineAllocation:
    """Fixed clustering pattern, full band, CSI-only water-filling."""
    precoders, p = _allocate_clustered(topology, state, pattern, power_budget)
    interference = phy.inter_cluster_interference(state, precoders, p, topology)
    rates = phy.rate(p, interference)
    return BaselineAllocation(
        pattern=pattern,
        precoders=precoders,
        p=p,
        rates=rates,
        bandwidth_fraction=np.ones(topology.num_users),
        per_bs_power=phy.per_bs_power(precoders, p, topology),
    )


class _ClusterCache:
    """Per-slot cache of cluster-local quantities for greedy pattern search.

    The allocation of a cluster does not depend on the rest of the pattern,
    so each feasible cluster is solved once: received powers of its users,
    and the interference gains it causes at every user in the network.
    """

    def __init__(
        self,
        topology: NetworkTopology,
        state: ChannelState,
        power_budget: float,
    ):
        self.topology = topology
        self.state = state
        self.power_budget = power_budget
        self.U = topology.num_users
        self._entries: dict[tuple[int, ...], tuple | None] = {}

    def entry(self, cluster: tuple[int, ...]):
        cluster = tuple(sorted(cluster))
        if cluster in self._entries:
            return self._entries[cluster]
        topo, state = self.topology, self.state
        K = topo.users_per_cell
        users = _cluster_users(cluster, K)
        m = len(users)
        Nt = topo.antennas_per_bs
        # ZF for this cluster alone
        H = state.h[np.ix_(users, list(cluster))].reshape(m, len(cluster) * Nt)
        gram = H @ H.conj().T
        if np.linalg.cond(gram) > phy.SINGULAR_COND:
            self._entries[cluster] = None
            return None
        W = H.conj().T @ np.linalg.inv(gram)  # (|c|*Nt, m)
        norms = np.sum(
            np.abs(W.T.reshape(m, len(cluster), Nt)) ** 2, axis=-1
        )  # (m, |c|)
        costs = norms.sum(axis=1)
        p = waterfill_sum_rate(costs, self.power_budget * len(cluster))
        per_bs = norms.T @ p
        worst = per_bs.max() if per_bs.size else 0.0
        if worst > self.power_budget:
            p *= self.power_budget / worst
        # interference power this cluster contributes at every user (U,)
        h = state.h[:, list(cluster)].reshape(self.U, len(cluster) * Nt)
        contrib = np.abs(h @ W) ** 2 @ p
        power = np.zeros(self.U)
        power[users] = p
        # own[u] includes the desired p_u (unit ZF gain) plus ~0 intra cross
        own = np.zeros(self.U)
        own[users] = contrib[users]
        self._entries[cluster] = (power, contrib, own)
        return self._entries[cluster]

    def pattern_sum_rate(self, clusters: list[tuple[int, ...]]) -> float:
        power = np.zeros(self.U)
        interference = np.ones(self.U)  # 1 + I
        for c in clusters:
            e = self.entry(c)
            if e is None:
                return -np.inf
            power += e[0]
            interference += e[1] - e[2]
        return float(np.sum(np.log2(1.0 + power / interference)))


def greedy_dynamic_cluster(
    topology: NetworkTopology,
    state: ChannelState,
    power_budget: float,
    max_cluster_size: int,
) -> BaselineAllocation:
    """Start from singletons and merge adjacent clusters while the merge with
    the largest instantaneous sum-rate gain is positive.  Ties break toward
    the merge whose smallest BS index is lowest."""
    B = topology.num_cells
    clusters = [(b,) for b in range(B)]
    neighbor = topology.neighbor_graph
    cache = _ClusterCache(topology, state, power_budget)

    def adjacent(c1, c2) -> bool:
        return any(neighbor[i, j] for i in c1 for j in c2)

    current = cache.pattern_sum_rate(clusters)
    if not np.isfinite(current):
        raise phy.SingularChannelError(
            f"singleton allocation singular at slot {state.slot_index}"
        )
    while True:
        best = None  # (gain, -min(merged), i, j, merged, value)
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                merged = tuple(sorted(clusters[i] + clusters[j]))
                if len(merged) > max_cluster_size:
                    continue
                if not adjacent(clusters[i], clusters[j]):
                    continue
                trial = [c for idx, c in enumerate(clusters) if idx not in (i, j)]
                trial.append(merged)
                value = cache.pattern_sum_rate(trial)
                gain = value - current
                if gain <= 1e-12:
                    continue
                key = (gain, -min(merged))
                if best is None or key > best[:2]:
                    best = (gain, -min(merged), i, j, merged, value)
        if best is None:
            break
        _, _, i, j, merged, value = best
        clusters = [c for idx, c in enumerate(clusters) if idx not in (i, j)]
        clusters.append(merged)
        current = value

    pattern = ClusteringPattern(tuple(sorted(clusters)), 0)
    return static_cluster_allocate(topology, state, pattern, power_budget)


def default_static_pattern(
    catalog: PatternCatalog, pattern_id: int | None = None
) -> ClusteringPattern:
    """The configured pattern, or the first pattern with a non-singleton cluster."""
    if pattern_id is not None:
        if not 0 <= pattern_id < len(catalog):
            raise ConfigurationError(f"static pattern id {pattern_id} out of range")
        return catalog.patterns[pattern_id]
    for p in catalog.patterns:
        if any(len(c) > 1 for c in p.clusters):
            return p
    return catalog.patterns[0]
