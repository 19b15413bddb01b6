"""Cellular geometry, path gains and the catalog of feasible clustering patterns."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

# Clamp floor for the path-loss distance; avoids a singular gain on top of a BS.
MIN_DISTANCE_M = 1.0

# Exhaustive connected-partition enumeration is combinatorial; refuse above this.
EXHAUSTIVE_GUARD = 10


class ConfigurationError(ValueError):
    pass


def path_loss_db(distance: float | np.ndarray) -> float | np.ndarray:
    """Urban macrocell path loss PL = 34.5 + 35*log10(r), r in meters, clamped at 1 m."""
    r = np.maximum(distance, MIN_DISTANCE_M)
    return 34.5 + 35.0 * np.log10(r)


def linear_gain(distance: float | np.ndarray) -> float | np.ndarray:
    return 10.0 ** (-path_loss_db(distance) / 10.0)


def _hex_axial_coords(num_rings: int) -> list[tuple[int, int]]:
    coords = []
    for q in range(-num_rings, num_rings + 1):
        for r in range(-num_rings, num_rings + 1):
            if abs(q + r) <= num_rings:
                coords.append((q, r))
    coords.sort(key=lambda c: (max(abs(c[0]), abs(c[1]), abs(c[0] + c[1])), c))
    return coords


def _axial_to_xy(q: int, r: int, cell_radius: float) -> tuple[float, float]:
    # Pointy-top hexagons; adjacent centers are sqrt(3)*R apart.
    x = np.sqrt(3.0) * cell_radius * (q + r / 2.0)
    y = 1.5 * cell_radius * r
    return x, y


def _point_in_hex(x: float, y: float, radius: float) -> bool:
    # Pointy-top hexagon centered at origin with circumradius `radius`.
    if abs(x) > np.sqrt(3.0) * radius / 2.0 + 1e-12:
        return False
    return abs(y) <= radius - abs(x) / np.sqrt(3.0) + 1e-12


@dataclass(frozen=True)
class ClusteringPattern:
    """A partition of the BS set into disjoint connected clusters."""

    clusters: tuple[tuple[int, ...], ...]
    pattern_id: int

    def cluster_of(self, bs: int) -> tuple[int, ...]:
        for c in self.clusters:
            if bs in c:
                return c
        raise KeyError(bs)


@dataclass
class PatternCatalog:
    patterns: list[ClusteringPattern]
    max_cluster_size: int

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def all_clusters(self) -> list[tuple[int, ...]]:
        """Distinct clusters appearing in any pattern, sorted."""
        seen = {c for p in self.patterns for c in p.clusters}
        return sorted(seen)

    def to_dict(self) -> dict:
        return {
            "max_cluster_size": self.max_cluster_size,
            "patterns": [[list(c) for c in p.clusters] for p in self.patterns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatternCatalog":
        patterns = [
            ClusteringPattern(tuple(tuple(c) for c in p), i)
            for i, p in enumerate(d["patterns"])
        ]
        return cls(patterns=patterns, max_cluster_size=int(d["max_cluster_size"]))


@dataclass
class NetworkTopology:
    """Immutable geometry of the multicell network.

    Path gains are stored as linear power gains sigma[b, k, b'] for MS (b,k)
    and BS b'.  When ``normalize_gains`` is set at construction, all gains are
    divided by the cell-edge gain so received powers are expressed in units of
    the cell-edge SNR; this is a pure units choice (equivalent to rescaling
    the noise power) and keeps transmit powers O(1)-O(100).
    """

    num_cells: int
    users_per_cell: int
    antennas_per_bs: int
    cell_radius: float
    bs_positions: np.ndarray  # (B, 2)
    ms_positions: np.ndarray  # (B, K, 2)
    path_gains: np.ndarray  # (B, K, B)
    neighbor_graph: np.ndarray  # (B, B) bool, symmetric, zero diagonal
    axial_coords: np.ndarray  # (B, 2) int, hex lattice coordinates
    gain_scale: float = 1.0  # divisor applied to raw gains
    rng_seed: int = 0

    @property
    def num_users(self) -> int:
        return self.num_cells * self.users_per_cell

    def user_index(self, b: int, k: int) -> int:
        return b * self.users_per_cell + k

    def user_pair(self, u: int) -> tuple[int, int]:
        return divmod(u, self.users_per_cell)

    def gains_flat(self) -> np.ndarray:
        """Path gains reshaped to (num_users, B)."""
        return self.path_gains.reshape(self.num_users, self.num_cells)

    def neighbors(self, b: int) -> list[int]:
        return list(np.flatnonzero(self.neighbor_graph[b]))

    def validate(self) -> None:
        if self.antennas_per_bs < self.users_per_cell:
            raise ConfigurationError(
                f"antennas_per_bs={self.antennas_per_bs} < users_per_cell={self.users_per_cell}"
            )
        if not np.all(self.path_gains > 0):
            raise ConfigurationError("path gains must be strictly positive")
        if not np.array_equal(self.neighbor_graph, self.neighbor_graph.T):
            raise ConfigurationError("neighbor graph must be symmetric")
        for b in range(self.num_cells):
            d = np.linalg.norm(self.ms_positions[b] - self.bs_positions[b], axis=1)
            if np.any(d > self.cell_radius + 1e-9):
                raise ConfigurationError(f"MS outside cell radius in cell {b}")

    def to_dict(self) -> dict:
        return {
            "num_cells": self.num_cells,
            "users_per_cell": self.users_per_cell,
            "antennas_per_bs": self.antennas_per_bs,
            "cell_radius": self.cell_radius,
            "bs_positions": self.bs_positions.tolist(),
            "ms_positions": self.ms_positions.tolist(),
            "path_gains": self.path_gains.tolist(),
            "neighbor_graph": self.neighbor_graph.astype(int).tolist(),
            "axial_coords": self.axial_coords.tolist(),
            "gain_scale": self.gain_scale,
            "rng_seed": self.rng_seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkTopology":
        topo = cls(
            num_cells=int(d["num_cells"]),
            users_per_cell=int(d["users_per_cell"]),
            antennas_per_bs=int(d["antennas_per_bs"]),
            cell_radius=float(d["cell_radius"]),
            bs_positions=np.asarray(d["bs_positions"], dtype=float),
            ms_positions=np.asarray(d["ms_positions"], dtype=float),
            path_gains=np.asarray(d["path_gains"], dtype=float),
            neighbor_graph=np.asarray(d["neighbor_graph"], dtype=bool),
            axial_coords=np.asarray(d["axial_coords"], dtype=int),
            gain_scale=float(d.get("gain_scale", 1.0)),
            rng_seed=int(d.get("rng_seed", 0)),
        )
        topo.validate()
        return topo

    @classmethod
    def from_json(cls, s: str) -> "NetworkTopology":
        return cls.from_dict(json.loads(s))


def build_hex_topology(
    num_rings: int,
    cell_radius: float,
    users_per_cell: int,
    antennas: int,
    rng_seed: int = 0,
    normalize_gains: bool = True,
    placement_fraction: float = 1.0,
) -> NetworkTopology:
    """Hexagonal lattice of BSs with uniformly placed MSs and path-loss gains.

    ``placement_fraction`` shrinks the placement region toward the cell
    center (1.0 = whole cell, 0.4 = interior users only).
    """
    if num_rings < 0:
        raise ConfigurationError("num_rings must be >= 0")
    if cell_radius <= 0:
        raise ConfigurationError("cell_radius must be > 0")
    if antennas < users_per_cell:
        raise ConfigurationError(
            f"antennas={antennas} < users_per_cell={users_per_cell}"
        )
    if not 0 < placement_fraction <= 1.0:
        raise ConfigurationError("placement_fraction must be in (0, 1]")

    coords = _hex_axial_coords(num_rings)
    B = len(coords)
    bs_positions = np.array(
        [_axial_to_xy(q, r, cell_radius) for q, r in coords], dtype=float
    )

    rng = np.random.default_rng(rng_seed)
    ms_positions = np.zeros((B, users_per_cell, 2))
    region = cell_radius * placement_fraction
    for b in range(B):
        for k in range(users_per_cell):
            while True:
                x = rng.uniform(-region, region)
                y = rng.uniform(-region, region)
                if _point_in_hex(x, y, region):
                    break
            ms_positions[b, k] = bs_positions[b] + (x, y)

    # sigma[b, k, b'] from MS (b,k) to BS b'
    diff = ms_positions[:, :, None, :] - bs_positions[None, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    gains = linear_gain(dist)
    gain_scale = float(linear_gain(cell_radius)) if normalize_gains else 1.0
    gains = gains / gain_scale

    ax = np.array(coords, dtype=int)
    neighbor = np.zeros((B, B), dtype=bool)
    for i, j in itertools.combinations(range(B), 2):
        dq = ax[i, 0] - ax[j, 0]
        dr = ax[i, 1] - ax[j, 1]
        if max(abs(dq), abs(dr), abs(dq + dr)) == 1:
            neighbor[i, j] = neighbor[j, i] = True

    topo = NetworkTopology(
        num_cells=B,
        users_per_cell=users_per_cell,
        antennas_per_bs=antennas,
        cell_radius=cell_radius,
        bs_positions=bs_positions,
        ms_positions=ms_positions,
        path_gains=gains,
        neighbor_graph=neighbor,
        axial_coords=ax,
        gain_scale=gain_scale,
        rng_seed=rng_seed,
    )
    topo.validate()
    return topo


def _connected_subsets_containing(
    root: int, allowed: frozenset[int], neighbor: np.ndarray, max_size: int
) -> list[tuple[int, ...]]:
    """All connected subsets of `allowed` that contain `root`, up to max_size."""
    results = set()

    def grow(current: frozenset[int]) -> None:
        results.add(tuple(sorted(current)))
        if len(current) == max_size:
            return
        frontier = {
            j
            for i in current
            for j in np.flatnonzero(neighbor[i])
            if j in allowed and j not in current
        }
        for j in sorted(frontier):
            grow(current | {j})

    grow(frozenset([root]))
    return sorted(results)


def _enumerate_connected_partitions(
    B: int, neighbor: np.ndarray, max_size: int
) -> list[tuple[tuple[int, ...], ...]]:
    partitions = []

    def recurse(remaining: frozenset[int], acc: list[tuple[int, ...]]) -> None:
        if not remaining:
            partitions.append(tuple(acc))
            return
        root = min(remaining)
        for block in _connected_subsets_containing(root, remaining, neighbor, max_size):
            acc.append(block)
            recurse(remaining - set(block), acc)
            acc.pop()

    recurse(frozenset(range(B)), [])
    partitions.sort()
    return partitions


def _tiling_patterns(
    topology: NetworkTopology, max_cluster_size: int
) -> list[tuple[tuple[int, ...], ...]]:
    """Shifted greedy groupings of neighboring cells plus the all-singletons pattern."""
    B = topology.num_cells
    neighbor = topology.neighbor_graph
    singletons = tuple((b,) for b in range(B))
    patterns = {singletons}
    for start in range(B):
        assigned = np.zeros(B, dtype=bool)
        clusters = []
        order = [(start + i) % B for i in range(B)]
        for b in order:
            if assigned[b]:
                continue
            cluster = [b]
            assigned[b] = True
            for j in order:
                if len(cluster) >= max_cluster_size:
                    break
                if not assigned[j] and any(neighbor[i, j] for i in cluster):
                    cluster.append(j)
                    assigned[j] = True
            clusters.append(tuple(sorted(cluster)))
        patterns.add(tuple(sorted(clusters)))
    return sorted(patterns)


def enumerate_patterns(
    topology: NetworkTopology, max_cluster_size: int, mode: str = "exhaustive"
) -> PatternCatalog:
    """Catalog of feasible clustering patterns (connected partitions, bounded size)."""
    if max_cluster_size < 1:
        raise ConfigurationError("max_cluster_size must be >= 1")
    B = topology.num_cells
    if mode == "exhaustive":
        if B > EXHAUSTIVE_GUARD:
            raise ConfigurationError(
                f"exhaustive pattern enumeration refused for B={B} > {EXHAUSTIVE_GUARD}; "
                "use mode='tiling'"
            )
        raw = _enumerate_connected_partitions(
            B, topology.neighbor_graph, max_cluster_size
        )
    elif mode == "tiling":
        raw = _tiling_patterns(topology, max_cluster_size)
    else:
        raise ConfigurationError(f"unknown pattern mode {mode!r}")

    # All-singletons first, deterministic order after.
    singletons = tuple((b,) for b in range(B))
    raw = [singletons] + [p for p in raw if p != singletons]
    patterns = [ClusteringPattern(p, i) for i, p in enumerate(raw)]
    return PatternCatalog(patterns=patterns, max_cluster_size=max_cluster_size)
