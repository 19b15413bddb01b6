"""Episode orchestration, steady-state metrics, sweeps and file outputs."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, channel as chan, learning, phy
from .config import SCHEMA_VERSION, SimConfig
from .control import LagrangeMultipliers, PotentialStore
from .learning import EpisodeTrace, run_learning_episode
from .queueing import QueueState, step_queue_packets_from_uniforms
from .topology import (
    ConfigurationError,
    NetworkTopology,
    PatternCatalog,
    build_hex_topology,
    enumerate_patterns,
)

METRICS_FIELDS = [
    "schema_version",
    "scheme",
    "axis",
    "axis_value",
    "seed",
    "slots",
    "power_budget",
    "arrival_rate",
    "mean_queue",
    "mean_delay_slots",
    "mean_delay_s",
    "drop_rate",
    "mean_power",
    "max_bs_power",
    "contraction_fraction",
    "mean_qsiwfa_iterations",
    "throughput_pkts_per_slot",
]

TRACE_FIELDS = [
    "schema_version",
    "slot",
    "queue_mean",
    "power_mean",
    "gamma_mean",
    "pattern_id",
    "contraction_modulus",
    "contraction_satisfied",
    "qsiwfa_iterations",
    "drops",
]


@dataclass
class Metrics:
    """Steady-state summary of one episode (post warm-up unless noted)."""

    scheme: str
    seed: int
    slots: int
    power_budget: float
    arrival_rate: float
    mean_queue: float
    mean_delay_slots: float  # Little's law: E[Q] / (effective arrivals per slot)
    mean_delay_s: float
    drop_rate: float  # dropped packets per user per slot
    mean_power: float  # per-BS transmit power, averaged over BSs and full horizon
    max_bs_power: float  # largest per-BS horizon average
    contraction_fraction: float  # proposed scheme only, NaN otherwise
    mean_qsiwfa_iterations: float
    throughput_pkts_per_slot: float
    axis: str = ""
    axis_value: float = float("nan")

    def row(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return {k: d[k] for k in METRICS_FIELDS}


def build_instance(config: SimConfig) -> tuple[NetworkTopology, PatternCatalog]:
    topology = build_hex_topology(
        num_rings=config.num_rings,
        cell_radius=config.cell_radius,
        users_per_cell=config.users_per_cell,
        antennas=config.antennas,
        rng_seed=config.topology_seed,
        normalize_gains=config.normalize_gains,
        placement_fraction=config.placement_fraction,
    )
    catalog = enumerate_patterns(
        topology, config.max_cluster_size, mode=config.pattern_mode
    )
    return topology, catalog


def _run_baseline_episode(
    config: SimConfig, topology: NetworkTopology, catalog: PatternCatalog
) -> EpisodeTrace:
    """Slot loop shared by the CSI-only schemes; consumes the same channel and
    traffic substreams as the learning scheme (common random numbers)."""
    U = topology.num_users
    B = topology.num_cells
    T = config.slots
    drain = config.drain
    lam = np.full(U, config.arrival_prob)
    queue = QueueState(np.zeros(U, dtype=np.int64), config.capacity)
    static_pattern = baselines.default_static_pattern(catalog, config.static_pattern_id)

    tr = EpisodeTrace(
        queue_mean=np.zeros(T),
        per_bs_power=np.zeros((T, B)),
        gamma=np.zeros((T, B)),
        pattern_id=np.zeros(T, dtype=int),
        contraction_modulus=np.full(T, np.nan),
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

        alloc = None
        for draw in range(learning.MAX_SINGULAR_RESAMPLES):
            state = chan.sample_channel(topology, t, config.seed, draw)
            try:
                if config.scheme == "fca":
                    alloc = baselines.fca_allocate(topology, state, config.power_budget)
                elif config.scheme == "static":
                    alloc = baselines.static_cluster_allocate(
                        topology, state, static_pattern, config.power_budget
                    )
                elif config.scheme == "greedy":
                    alloc = baselines.greedy_dynamic_cluster(
                        topology, state, config.power_budget, config.max_cluster_size
                    )
                else:
                    raise ConfigurationError(f"not a baseline scheme: {config.scheme!r}")
                break
            except phy.SingularChannelError:
                continue
        if alloc is None:
            raise phy.SingularChannelError(f"no nonsingular channel draw at slot {t}")

        mu_tau = np.clip(alloc.rates * alloc.bandwidth_fraction * drain, 0.0, 1.0 - lam)
        new_queue, drops = step_queue_packets_from_uniforms(
            queue, mu_tau, arrivals, u_dep, lam
        )

        tr.queue_mean[t] = float(queue.q.mean())
        tr.per_bs_power[t] = alloc.per_bs_power
        tr.pattern_id[t] = -1
        tr.qsiwfa_iterations[t] = 0
        tr.drops[t] = drops
        tr.queues[t] = queue.q
        tr.rates[t] = alloc.rates * alloc.bandwidth_fraction
        queue = new_queue

    return tr


def summarize(config: SimConfig, trace: EpisodeTrace) -> Metrics:
    T = config.slots
    warm = int(np.floor(T * config.warmup_fraction))
    window = slice(warm, T)
    U = trace.queues.shape[1]

    mean_queue = float(trace.queues[window].mean())
    drops_per_user_slot = float(trace.drops[window].sum()) / (U * max(T - warm, 1))
    lam_eff = config.arrival_prob - drops_per_user_slot
    delay_slots = mean_queue / lam_eff if lam_eff > 0 else 0.0
    delay_s = delay_slots * config.slot_duration

    per_bs_mean = trace.per_bs_power.mean(axis=0)  # full horizon by convention
    contraction = (
        float(trace.contraction_satisfied[window].mean())
        if config.scheme == "proposed"
        else float("nan")
    )
    # Throughput from queue accounting: accepted arrivals minus queue growth.
    accepted = config.arrival_prob - drops_per_user_slot
    growth = float(trace.queues[T - 1].mean() - trace.queues[warm].mean()) / max(
        T - warm, 1
    )
    served = max(accepted - growth, 0.0)

    return Metrics(
        scheme=config.scheme,
        seed=config.seed,
        slots=T,
        power_budget=config.power_budget,
        arrival_rate=config.arrival_rate,
        mean_queue=mean_queue,
        mean_delay_slots=delay_slots,
        mean_delay_s=delay_s,
        drop_rate=drops_per_user_slot,
        mean_power=float(per_bs_mean.mean()),
        max_bs_power=float(per_bs_mean.max()),
        contraction_fraction=contraction,
        mean_qsiwfa_iterations=float(trace.qsiwfa_iterations[window].mean()),
        throughput_pkts_per_slot=served,
    )


def run_episode(
    config: SimConfig,
    topology: NetworkTopology | None = None,
    catalog: PatternCatalog | None = None,
    store: PotentialStore | None = None,
    lms: LagrangeMultipliers | None = None,
) -> tuple[Metrics, EpisodeTrace]:
    if topology is None or catalog is None:
        topology, catalog = build_instance(config)
    if config.scheme == "proposed":
        _, _, trace = run_learning_episode(config, topology, catalog, store, lms)
    else:
        trace = _run_baseline_episode(config, topology, catalog)
    return summarize(config, trace), trace


def run_sweep(
    base_config: SimConfig,
    axis: str,
    values: list[float],
    seeds: list[int],
    schemes: tuple[str, ...] | None = None,
) -> list[Metrics]:
    """Cross product of axis values x seeds x schemes, common random numbers
    within each (value, seed) cell."""
    if not any(f.name == axis for f in dataclasses.fields(SimConfig)):
        raise ConfigurationError(f"unknown sweep axis {axis!r}")
    if schemes is None:
        schemes = (base_config.scheme,)
    results: list[Metrics] = []
    for value in values:
        cfg_v = base_config.replace(**{axis: value})
        topology, catalog = build_instance(cfg_v)
        for seed in seeds:
            for scheme in schemes:
                cfg = cfg_v.replace(seed=seed, scheme=scheme)
                metrics, _ = run_episode(cfg, topology, catalog)
                metrics.axis = axis
                metrics.axis_value = float(value)
                results.append(metrics)
    return results


def output_root(override: str | None = None) -> Path:
    """CLI flag beats the NETMIMO_OUTPUT_DIR env var beats the cwd."""
    if override:
        return Path(override)
    return Path(os.environ.get("NETMIMO_OUTPUT_DIR", "."))


def write_metrics_csv(rows: list[Metrics], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRICS_FIELDS)
        writer.writeheader()
        for m in rows:
            writer.writerow(m.row())


def write_trace_csv(trace: EpisodeTrace, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    T = trace.queue_mean.size
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRACE_FIELDS)
        writer.writeheader()
        for t in range(T):
            writer.writerow(
                {
                    "schema_version": SCHEMA_VERSION,
                    "slot": t,
                    "queue_mean": trace.queue_mean[t],
                    "power_mean": trace.per_bs_power[t].mean(),
                    "gamma_mean": trace.gamma[t].mean(),
                    "pattern_id": int(trace.pattern_id[t]),
                    "contraction_modulus": trace.contraction_modulus[t],
                    "contraction_satisfied": int(trace.contraction_satisfied[t]),
                    "qsiwfa_iterations": int(trace.qsiwfa_iterations[t]),
                    "drops": int(trace.drops[t]),
                }
            )


def config_hash(config: SimConfig) -> str:
    return hashlib.sha256(config.to_json().encode()).hexdigest()[:16]


def write_summary_json(
    config: SimConfig, metrics: Metrics, path: str | Path
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "config": config.to_dict(),
        "metrics": metrics.row(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, default=float)
        f.write("\n")
