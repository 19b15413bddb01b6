"""Zero-forcing precoding, power accounting, rates and the inter-cluster coupling matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .topology import ClusteringPattern, NetworkTopology

ZF_TOL = 1e-9
# Condition-number threshold above which a stacked channel matrix is treated
# as rank deficient and the slot is resampled/skipped.
SINGULAR_COND = 1e12


class SingularChannelError(RuntimeError):
    pass


@dataclass
class PrecoderSet:
    """w[u, b', :] for served user u and BS b'; zero outside the user's cluster."""

    w: np.ndarray  # (U, B, N_t) complex
    pattern: ClusteringPattern

    def norms_sq(self) -> np.ndarray:
        """||w_{(b,k),b'}||^2 per (user, BS), shape (U, B)."""
        return np.sum(np.abs(self.w) ** 2, axis=-1)


@dataclass
class PowerAllocation:
    p: np.ndarray  # received power per user (noise units)
    per_bs: np.ndarray  # transmit power per BS
    interference: np.ndarray  # inter-cluster interference per user


def _cluster_users(cluster: tuple[int, ...], users_per_cell: int) -> list[int]:
    return [b * users_per_cell + k for b in cluster for k in range(users_per_cell)]


def compute_zf_precoders(
    channel: ChannelState,
    pattern: ClusteringPattern,
    topology: NetworkTopology,
) -> PrecoderSet:
    """Minimum-norm ZF: unit desired gain, zero intra-cluster cross gains."""
    U, B, Nt = channel.h.shape
    K = topology.users_per_cell
    w = np.zeros((U, B, Nt), dtype=complex)
    for cluster in pattern.clusters:
        users = _cluster_users(cluster, K)
        m = len(users)
        # Stacked channel: rows are served users, columns the cluster's antennas.
        H = channel.h[np.ix_(users, list(cluster))].reshape(m, len(cluster) * Nt)
        gram = H @ H.conj().T
        if np.linalg.cond(gram) > SINGULAR_COND:
            raise SingularChannelError(
                f"rank-deficient stacked channel for cluster {cluster} at slot "
                f"{channel.slot_index}"
            )
        W = H.conj().T @ np.linalg.inv(gram)  # (|w|*Nt, m), column j serves users[j]
        for j, u in enumerate(users):
            w[u, list(cluster), :] = W[:, j].reshape(len(cluster), Nt)
    return PrecoderSet(w=w, pattern=pattern)


def effective_gains(channel: ChannelState, precoders: PrecoderSet) -> np.ndarray:
    """G[u, u'] = sum_{b'} h[u, b'] . w[u', b'], complex, shape (U, U)."""
    U = channel.num_users
    h = channel.h.reshape(U, -1)
    w = precoders.w.reshape(U, -1)
    return h @ w.T


def cluster_index_of_users(
    pattern: ClusteringPattern, users_per_cell: int, num_users: int
) -> np.ndarray:
    """Cluster ordinal (position in pattern.clusters) per user."""
    out = np.empty(num_users, dtype=int)
    for n, cluster in enumerate(pattern.clusters):
        for u in _cluster_users(cluster, users_per_cell):
            out[u] = n
    return out


def per_bs_power(
    precoders: PrecoderSet, p: np.ndarray, topology: NetworkTopology
) -> np.ndarray:
    """P_b = sum over served users of ||w_{(b',k),b}||^2 p_{b',k}."""
    norms = precoders.norms_sq()  # (U, B)
    return norms.T @ np.asarray(p, dtype=float)


def build_coupling_matrix(
    channel: ChannelState,
    precoders: PrecoderSet,
    topology: NetworkTopology,
) -> np.ndarray:
    """S[(b,k),(b',k')] = |sum_{b'' in cluster(b',k')} h.w|^2 across clusters, 0 within."""
    G = effective_gains(channel, precoders)
    S = np.abs(G) ** 2
    cidx = cluster_index_of_users(
        precoders.pattern, topology.users_per_cell, channel.num_users
    )
    same = cidx[:, None] == cidx[None, :]
    S[same] = 0.0
    return S


def inter_cluster_interference(
    channel: ChannelState,
    precoders: PrecoderSet,
    p: np.ndarray,
    topology: NetworkTopology,
) -> np.ndarray:
    """I_{b,k} = (S @ p) at each user."""
    S = build_coupling_matrix(channel, precoders, topology)
    return S @ np.asarray(p, dtype=float)


def rate(p: np.ndarray, interference: np.ndarray) -> np.ndarray:
    """Spectral efficiency log2(1 + p / (1 + I)), bit/s/Hz."""
    p = np.asarray(p, dtype=float)
    interference = np.asarray(interference, dtype=float)
    return np.log2(1.0 + p / (1.0 + interference))


def zf_residuals(
    channel: ChannelState, precoders: PrecoderSet, topology: NetworkTopology
) -> tuple[np.ndarray, np.ndarray]:
    """(|desired - 1|, max intra-cluster cross gain) per user, for diagnostics."""
    G = effective_gains(channel, precoders)
    U = channel.num_users
    cidx = cluster_index_of_users(precoders.pattern, topology.users_per_cell, U)
    desired_err = np.abs(np.diag(G) - 1.0)
    same = cidx[:, None] == cidx[None, :]
    cross = np.abs(G) * same
    np.fill_diagonal(cross, 0.0)
    return desired_err, cross.max(axis=1)
