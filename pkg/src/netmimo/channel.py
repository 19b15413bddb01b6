"""Per-slot small-scale fading and optional discrete CSI quantization."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .topology import NetworkTopology

_CHANNEL_TAG = 0x6368
_TRAFFIC_TAG = 0x7472


@dataclass
class ChannelState:
    """Complex channel vectors h[u, b', :] for user u = b*K + k, scaled by sqrt(sigma)."""

    h: np.ndarray  # (num_users, B, N_t) complex
    slot_index: int

    @property
    def num_users(self) -> int:
        return self.h.shape[0]


@dataclass
class CsiCodebook:
    """Per-scalar quantization levels applied to real and imaginary parts."""

    levels: np.ndarray  # sorted, 1-D
    probs: np.ndarray | None = None  # per-level probabilities, uniform if None

    def __post_init__(self) -> None:
        self.levels = np.asarray(self.levels, dtype=float)
        if self.levels.size < 2:
            raise ValueError("codebook needs at least 2 levels")
        if not np.all(np.diff(self.levels) > 0):
            raise ValueError("codebook levels must be sorted and distinct")
        if self.probs is None:
            self.probs = np.full(self.levels.size, 1.0 / self.levels.size)
        else:
            self.probs = np.asarray(self.probs, dtype=float)
            if self.probs.shape != self.levels.shape or not np.isclose(
                self.probs.sum(), 1.0
            ):
                raise ValueError("probs must match levels and sum to 1")

    def quantize(self, values: np.ndarray) -> np.ndarray:
        """Nearest-level index per scalar (ties go to the lower level)."""
        mid = (self.levels[:-1] + self.levels[1:]) / 2.0
        return np.searchsorted(mid, values, side="right")


def slot_rng(seed: int, tag: int, slot: int, draw: int = 0) -> np.random.Generator:
    """Deterministic per-slot generator; independent of scheme and call order."""
    return np.random.default_rng(np.random.SeedSequence([seed, tag, slot, draw]))


def traffic_rng(seed: int, slot: int) -> np.random.Generator:
    return slot_rng(seed, _TRAFFIC_TAG, slot)


def sample_channel(
    topology: NetworkTopology, slot: int, seed: int, draw: int = 0
) -> ChannelState:
    """i.i.d. CN(0, sigma) entries; bit-exact replay for a given (seed, slot, draw)."""
    rng = slot_rng(seed, _CHANNEL_TAG, slot, draw)
    U = topology.num_users
    B = topology.num_cells
    Nt = topology.antennas_per_bs
    g = rng.standard_normal((U, B, Nt)) + 1j * rng.standard_normal((U, B, Nt))
    g *= np.sqrt(0.5)
    sigma = topology.gains_flat()  # (U, B)
    h = np.sqrt(sigma)[:, :, None] * g
    return ChannelState(h=h, slot_index=slot)


def quantize_channel(state: ChannelState, codebook: CsiCodebook) -> np.ndarray:
    """Indices into the codebook, shape (U, B, N_t, 2) for (real, imag)."""
    re = codebook.quantize(state.h.real)
    im = codebook.quantize(state.h.imag)
    return np.stack([re, im], axis=-1)


def dequantize(indices: np.ndarray, codebook: CsiCodebook) -> np.ndarray:
    """Complex channel reconstructed from quantization indices."""
    re = codebook.levels[indices[..., 0]]
    im = codebook.levels[indices[..., 1]]
    return re + 1j * im


def joint_state_count(num_scalars: int, codebook: CsiCodebook) -> int:
    return int(codebook.levels.size ** (2 * num_scalars))


def enumerate_joint_states(
    num_scalars: int, codebook: CsiCodebook, guard: int = 10_000
):
    """Yield (probability, complex vector of length num_scalars) over the joint space."""
    n = joint_state_count(num_scalars, codebook)
    if n > guard:
        raise ValueError(f"joint CSI state space {n} exceeds guard {guard}")
    axes = [range(codebook.levels.size)] * (2 * num_scalars)
    for combo in itertools.product(*axes):
        idx = np.asarray(combo)
        re_idx, im_idx = idx[:num_scalars], idx[num_scalars:]
        prob = float(np.prod(codebook.probs[idx]))
        vec = codebook.levels[re_idx] + 1j * codebook.levels[im_idx]
        yield prob, vec


def sample_quantized_index(
    rng: np.random.Generator, num_scalars: int, codebook: CsiCodebook
) -> int:
    """Index into the enumerate_joint_states order, sampled per the codebook distribution."""
    L = codebook.levels.size
    draws = rng.choice(L, size=2 * num_scalars, p=codebook.probs)
    idx = 0
    for d in draws:
        idx = idx * L + int(d)
    return idx
