"""Run configuration: a single versioned document shared by the CLI and harness."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .topology import ConfigurationError

SCHEMA_VERSION = 1

SCHEMES = ("proposed", "fca", "static", "greedy")


@dataclass
class SimConfig:
    # topology
    num_rings: int = 1
    cell_radius: float = 500.0
    users_per_cell: int = 1
    antennas: int = 2
    topology_seed: int = 0
    normalize_gains: bool = True
    placement_fraction: float = 1.0
    # clustering
    max_cluster_size: int = 2
    pattern_mode: str = "exhaustive"
    static_pattern_id: int | None = None  # baseline 2; default: first non-singleton
    # traffic (packet mode unless stated otherwise)
    arrival_rate: float = 40.0  # packets/s per user
    mean_packet_bits: float = 2.5e5
    slot_duration: float = 5.0e-3
    capacity: int = 9
    traffic_mode: str = "packets"
    # phy
    bandwidth_hz: float = 10.0e6
    # cost
    utility: str = "delay"
    outage_threshold: int = 5
    beta: float = 1.0
    # power
    power_budget: float = 2.0  # per BS, units of cell-edge-normalized noise power
    p_max: float = 50.0  # received-power cap; bounds bursts while gamma is small
    # episode
    scheme: str = "proposed"
    slots: int = 2000
    seed: int = 0
    warmup_fraction: float = 0.2
    # learning
    resolution: int = 3
    exponent_v: float = 0.6
    scale_v: float = 1.0
    exponent_gamma: float = 0.9
    scale_gamma: float = 1.0
    gamma_init: float = 1.0
    gamma_bound: float = 100.0
    # CSI quantization (None: continuous fading; list of levels: quantized mode)
    csi_levels: list | None = None
    # game
    qsiwfa_tol: float = 1.0e-8
    qsiwfa_max_iter: int = 200
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(
                f"config schema version {self.schema_version} != {SCHEMA_VERSION}"
            )
        if self.slots < 1:
            raise ConfigurationError("slots must be >= 1")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; pick from {SCHEMES}")
        if not 0.5 < self.exponent_v < self.exponent_gamma <= 1.0:
            raise ConfigurationError(
                "step exponents must satisfy 0.5 < exponent_v < exponent_gamma <= 1"
            )
        if self.traffic_mode not in ("packets", "bits"):
            raise ConfigurationError(f"unknown traffic mode {self.traffic_mode!r}")

    @property
    def drain(self) -> float:
        """Departure probability per unit spectral efficiency: BW * tau / N_bar."""
        return self.bandwidth_hz * self.slot_duration / self.mean_packet_bits

    @property
    def arrival_prob(self) -> float:
        return self.arrival_rate * self.slot_duration

    def replace(self, **kwargs) -> "SimConfig":
        return dataclasses.replace(self, **kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, s: str) -> "SimConfig":
        try:
            d = json.loads(s)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc
        return cls.from_dict(d)


def utility_values(
    utility: str, capacity: int, arrival_prob: float, outage_threshold: int
) -> np.ndarray:
    """f(Q) over Q = 0..N_Q: delay in slots by Little's law, or outage indicator."""
    q = np.arange(capacity + 1, dtype=float)
    if utility == "delay":
        return q / arrival_prob
    if utility == "outage":
        return (q >= outage_threshold).astype(float)
    raise ConfigurationError(f"unknown utility {utility!r}")
