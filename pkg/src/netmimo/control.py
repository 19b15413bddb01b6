"""Compact per-cluster per-user potential tables and GQSI-based pattern selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .topology import ConfigurationError, PatternCatalog, ClusteringPattern

REFERENCE_STATE = 0  # q^I = Q^I = 0: empty buffer


def interpolation_matrix(capacity: int, resolution: int) -> np.ndarray:
    """M, (N_Q+1) x (l_q+1): piecewise-linear expansion from anchors to full grid.

    Rows above the last anchor (only when N_Q % d != 0) clamp to the last anchor.
    """
    lq = capacity // resolution
    M = np.zeros((capacity + 1, lq + 1))
    for Q in range(capacity + 1):
        q, l = divmod(Q, resolution)
        if q >= lq:
            M[Q, lq] = 1.0
        else:
            M[Q, q] = (resolution - l) / resolution
            M[Q, q + 1] = l / resolution
    return M


def restriction_matrix(capacity: int, resolution: int) -> np.ndarray:
    """M-dagger, (l_q+1) x (N_Q+1): picks table values at the anchor states."""
    lq = capacity // resolution
    Md = np.zeros((lq + 1, capacity + 1))
    for q in range(lq + 1):
        Md[q, q * resolution] = 1.0
    return Md


@dataclass
class LagrangeMultipliers:
    gamma: np.ndarray  # per BS, nonnegative
    bound: float = 100.0

    def __post_init__(self) -> None:
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if np.any(self.gamma < 0) or np.any(self.gamma > self.bound):
            raise ValueError("multipliers must lie in [0, bound]")


def project_lm(gamma: np.ndarray | float, bound: float) -> np.ndarray | float:
    if bound <= 0:
        raise ValueError("projection bound must be positive")
    return np.clip(gamma, 0.0, bound)


class PotentialStore:
    """Tables V~[cluster][(b,k)] over compact states q in {0..l_q}.

    A cluster shared by several patterns has a single table.  The reference
    state q^I = 0 is pinned to zero at all times.
    """

    def __init__(
        self,
        clusters: list[tuple[int, ...]],
        users_per_cell: int,
        capacity: int,
        resolution: int = 3,
    ):
        if resolution < 1 or resolution > capacity:
            raise ConfigurationError("resolution must satisfy 1 <= d <= N_Q")
        self.users_per_cell = users_per_cell
        self.capacity = capacity
        self.resolution = resolution
        self.lq = capacity // resolution
        self.tables: dict[tuple[int, ...], dict[tuple[int, int], np.ndarray]] = {}
        for cluster in clusters:
            key = tuple(sorted(cluster))
            self.tables[key] = {
                (b, k): np.zeros(self.lq + 1)
                for b in key
                for k in range(users_per_cell)
            }

    def table(self, cluster: tuple[int, ...], user: tuple[int, int]) -> np.ndarray:
        try:
            return self.tables[tuple(sorted(cluster))][user]
        except KeyError as exc:
            raise ConfigurationError(
                f"no potential table for cluster {cluster}, user {user}"
            ) from exc

    def lookup(
        self, cluster: tuple[int, ...], user: tuple[int, int], Q: int
    ) -> float:
        """Interpolated potential V(Q) = V~(q) + (l/d)(V~(q+1) - V~(q))."""
        if not 0 <= Q <= self.capacity:
            raise ValueError(f"queue value {Q} out of [0, {self.capacity}]")
        v = self.table(cluster, user)
        q, l = divmod(Q, self.resolution)
        if q >= self.lq:
            return float(v[self.lq])
        return float(v[q] + (l / self.resolution) * (v[q + 1] - v[q]))

    def delta(self, cluster: tuple[int, ...], user: tuple[int, int], Q: int) -> float:
        """V(Q) - V([Q-1]^+), the water-level driver of the power game."""
        if Q == 0:
            return 0.0
        return self.lookup(cluster, user, Q) - self.lookup(cluster, user, Q - 1)

    def pin_reference(self) -> None:
        for users in self.tables.values():
            for v in users.values():
                v[REFERENCE_STATE] = 0.0

    def max_abs(self) -> float:
        return max(
            (float(np.max(np.abs(v))) for users in self.tables.values() for v in users.values()),
            default=0.0,
        )

    def to_dict(self) -> dict:
        return {
            "users_per_cell": self.users_per_cell,
            "capacity": self.capacity,
            "resolution": self.resolution,
            "tables": {
                ",".join(map(str, cluster)): {
                    f"{b},{k}": v.tolist() for (b, k), v in users.items()
                }
                for cluster, users in self.tables.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialStore":
        clusters = [
            tuple(int(x) for x in key.split(",")) for key in d["tables"]
        ]
        store = cls(
            clusters=clusters,
            users_per_cell=int(d["users_per_cell"]),
            capacity=int(d["capacity"]),
            resolution=int(d["resolution"]),
        )
        for key, users in d["tables"].items():
            cluster = tuple(int(x) for x in key.split(","))
            for ukey, values in users.items():
                b, k = (int(x) for x in ukey.split(","))
                store.tables[cluster][(b, k)] = np.asarray(values, dtype=float)
        return store

    @classmethod
    def from_json(cls, s: str) -> "PotentialStore":
        return cls.from_dict(json.loads(s))


def lookup_potential(
    store: PotentialStore, cluster: tuple[int, ...], user: tuple[int, int], Q: int
) -> float:
    return store.lookup(cluster, user, Q)


def delta_potential(
    store: PotentialStore, cluster: tuple[int, ...], user: tuple[int, int], Q: int
) -> float:
    return store.delta(cluster, user, Q)


def pattern_score(
    store: PotentialStore, pattern: ClusteringPattern, q_flat: np.ndarray
) -> float:
    """Sum over clusters and their users of interpolated potentials at the current GQSI."""
    total = 0.0
    K = store.users_per_cell
    for cluster in pattern.clusters:
        for b in cluster:
            for k in range(K):
                total += store.lookup(cluster, (b, k), int(q_flat[b * K + k]))
    return total


class PatternSelector:
    """Caches the cluster->pattern incidence so per-slot selection scores each
    distinct cluster once instead of once per pattern."""

    def __init__(self, store: PotentialStore, catalog: PatternCatalog):
        self.store = store
        self.catalog = catalog
        self.clusters = catalog.all_clusters
        for cluster in self.clusters:
            if tuple(sorted(cluster)) not in store.tables:
                raise ConfigurationError(f"no potential table for cluster {cluster}")
        index = {c: i for i, c in enumerate(self.clusters)}
        self.pattern_clusters = [
            np.array([index[tuple(sorted(c))] for c in p.clusters], dtype=int)
            for p in catalog.patterns
        ]

    def select(self, q_flat: np.ndarray) -> ClusteringPattern:
        K = self.store.users_per_cell
        scores = np.empty(len(self.clusters))
        for i, cluster in enumerate(self.clusters):
            s = 0.0
            for b in cluster:
                for k in range(K):
                    s += self.store.lookup(cluster, (b, k), int(q_flat[b * K + k]))
            scores[i] = s
        totals = np.array([scores[idx].sum() for idx in self.pattern_clusters])
        return self.catalog.patterns[int(np.argmin(totals))]


def select_pattern(
    store: PotentialStore, catalog: PatternCatalog, q_flat: np.ndarray
) -> ClusteringPattern:
    """argmin over patterns of the summed per-cluster potentials; ties to lowest id."""
    return PatternSelector(store, catalog).select(q_flat)
