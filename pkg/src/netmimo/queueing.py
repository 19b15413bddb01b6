"""Bursty sources, queue evolution (bit and packet modes) and the birth-death kernel."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .topology import ConfigurationError


@dataclass
class QueueState:
    q: np.ndarray  # nonnegative integers per user (packets or bits)
    capacity: int

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.int64)
        if np.any(self.q < 0) or np.any(self.q > self.capacity):
            raise ValueError("queue values must lie in [0, capacity]")

    def copy(self) -> "QueueState":
        return QueueState(self.q.copy(), self.capacity)


@dataclass
class TrafficConfig:
    """Arrival/service parameters; rates are per second, slot duration in seconds."""

    arrival_rate: np.ndarray  # lambda per user, packets/s
    mean_packet_bits: np.ndarray  # mean packet size per user, bits
    slot_duration: float  # tau, seconds
    mode: str = "packets"  # "packets" | "bits"
    capacity: int = 9  # N_Q

    def __post_init__(self) -> None:
        self.arrival_rate = np.atleast_1d(np.asarray(self.arrival_rate, dtype=float))
        self.mean_packet_bits = np.atleast_1d(
            np.asarray(self.mean_packet_bits, dtype=float)
        )
        if self.mode not in ("packets", "bits"):
            raise ConfigurationError(f"unknown traffic mode {self.mode!r}")
        if self.mode == "packets" and np.any(self.arrival_probability >= 1.0):
            raise ConfigurationError(
                "packet mode requires lambda * tau < 1 (at most one arrival per slot)"
            )
        if self.mode == "packets" and np.any(self.arrival_probability > 0.3):
            warnings.warn(
                "lambda * tau > 0.3 strains the one-event-per-slot approximation",
                stacklevel=2,
            )

    @property
    def arrival_probability(self) -> np.ndarray:
        return self.arrival_rate * self.slot_duration


def sample_arrivals(traffic: TrafficConfig, rng: np.random.Generator) -> np.ndarray:
    """Packet mode: 0/1 arrival indicators. Bit mode: Poisson packets x exponential bits."""
    if traffic.mode == "packets":
        return (rng.random(traffic.arrival_rate.shape) < traffic.arrival_probability).astype(
            np.int64
        )
    counts = rng.poisson(traffic.arrival_probability)
    sizes = rng.exponential(traffic.mean_packet_bits)
    return np.round(counts * sizes).astype(np.int64)


def step_queue_packets(
    queue: QueueState,
    departure_prob: np.ndarray,
    arrivals: np.ndarray,
    rng: np.random.Generator,
    arrival_prob: np.ndarray | float = 0.0,
) -> tuple[QueueState, int]:
    """One birth-death slot with at most one event per user per slot.

    Marginals match the kernel exactly: P(up) = lambda*tau (pre-drawn
    ``arrivals``), P(down) = mu*tau via conditional thresholding on the
    no-arrival branch.  Returns the new state and the overflow drop count.
    """
    return step_queue_packets_from_uniforms(
        queue, departure_prob, arrivals, rng.random(queue.q.shape), arrival_prob
    )


def step_queue_packets_from_uniforms(
    queue: QueueState,
    departure_prob: np.ndarray,
    arrivals: np.ndarray,
    u_dep: np.ndarray,
    arrival_prob: np.ndarray | float = 0.0,
) -> tuple[QueueState, int]:
    """Packet step driven by pre-drawn uniforms, for common random numbers
    across schemes (the uniforms are scheme-independent, the thresholds not).

    At most one event per slot: a slot with an arrival cannot also depart, so
    the departure threshold is mu*tau / (1 - lambda*tau) on the no-arrival
    branch, making the unconditional down probability exactly mu*tau.
    """
    mu_tau = np.asarray(departure_prob, dtype=float)
    lam = np.asarray(arrival_prob, dtype=float)
    if np.any(mu_tau < 0) or np.any(mu_tau + lam > 1 + 1e-12):
        raise ValueError("need 0 <= mu*tau and lambda*tau + mu*tau <= 1")
    arrivals = np.asarray(arrivals, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        thresh = np.where(lam < 1.0, mu_tau / (1.0 - lam), 0.0)
    departures = (arrivals == 0) & (np.asarray(u_dep) < thresh) & (queue.q > 0)
    q = queue.q - departures.astype(np.int64) + arrivals
    drops = int(np.sum(np.maximum(q - queue.capacity, 0)))
    q = np.minimum(q, queue.capacity)
    return QueueState(q, queue.capacity), drops


def step_queue_bits(
    queue: QueueState, served_bits: np.ndarray, arrival_bits: np.ndarray
) -> tuple[QueueState, int]:
    """Q' = min([Q - R*tau]^+ + A, N_Q) per user; returns dropped bits."""
    served = np.asarray(served_bits, dtype=float)
    arrivals = np.asarray(arrival_bits, dtype=float)
    if np.any(served < 0) or np.any(arrivals < 0):
        raise ValueError("served and arrival bits must be nonnegative")
    q = np.maximum(queue.q - served, 0) + arrivals
    drops = int(np.sum(np.maximum(q - queue.capacity, 0)))
    q = np.minimum(q, queue.capacity).astype(np.int64)
    return QueueState(q, queue.capacity), drops


def birth_death_kernel(
    q: int, arrival_prob: float, departure_prob: float, capacity: int
) -> dict[int, float]:
    """Transition distribution over {q-1, q, q+1}; blocked moves fold into the self-loop."""
    if not 0 <= q <= capacity:
        raise ValueError("queue value out of range")
    if arrival_prob < 0 or departure_prob < 0 or arrival_prob + departure_prob > 1:
        raise ValueError("need arrival_prob + departure_prob <= 1, both nonnegative")
    up = arrival_prob if q < capacity else 0.0
    down = departure_prob if q > 0 else 0.0
    dist = {q: 1.0 - up - down}
    if up > 0:
        dist[q + 1] = up
    if down > 0:
        dist[q - 1] = down
    return dist
