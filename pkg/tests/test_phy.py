import numpy as np
import pytest

from netmimo.channel import ChannelState, sample_channel
from netmimo.phy import (
    SingularChannelError,
    build_coupling_matrix,
    compute_zf_precoders,
    effective_gains,
    inter_cluster_interference,
    per_bs_power,
    rate,
    zf_residuals,
)
from netmimo.topology import ClusteringPattern, build_hex_topology


@pytest.fixture(scope="module")
def topo():
    return build_hex_topology(1, 500.0, 1, 2, rng_seed=0)


@pytest.fixture(scope="module")
def pattern():
    return ClusteringPattern(((0, 1), (2, 3), (4, 5), (6,)), 1)


def test_zf_unit_desired_zero_cross(topo, pattern):
    state = sample_channel(topo, 0, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    desired_err, cross = zf_residuals(state, pre, topo)
    assert np.all(desired_err < 1e-9)
    assert np.all(cross < 1e-9)


def test_zf_zero_outside_cluster(topo, pattern):
    state = sample_channel(topo, 1, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    norms = pre.norms_sq()
    for u in range(topo.num_users):
        cluster = pattern.cluster_of(u)  # K=1 so user u lives in cell u
        outside = [b for b in range(topo.num_cells) if b not in cluster]
        assert np.all(norms[u, outside] == 0)


def test_zf_minimum_norm_among_zf_solutions(topo):
    # For a single-user cluster the min-norm ZF is h / ||h||^2
    state = sample_channel(topo, 2, 0)
    singletons = ClusteringPattern(tuple((b,) for b in range(7)), 0)
    pre = compute_zf_precoders(state, singletons, topo)
    h = state.h[0, 0]
    expected = h.conj() / np.sum(np.abs(h) ** 2)
    assert np.allclose(pre.w[0, 0], expected)


def test_singular_channel_detected(topo, pattern):
    state = sample_channel(topo, 3, 0)
    h = state.h.copy()
    h[1] = h[0]  # duplicate rows make the cluster (0,1) stack rank deficient
    with pytest.raises(SingularChannelError):
        compute_zf_precoders(ChannelState(h=h, slot_index=3), pattern, topo)


def test_per_bs_power_matches_manual(topo, pattern):
    state = sample_channel(topo, 4, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    p = np.arange(1.0, 8.0)
    P = per_bs_power(pre, p, topo)
    norms = pre.norms_sq()
    manual = np.array([np.sum(norms[:, b] * p) for b in range(7)])
    assert np.allclose(P, manual)
    assert np.all(P >= 0)


def test_coupling_zero_within_cluster(topo, pattern):
    state = sample_channel(topo, 5, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    S = build_coupling_matrix(state, pre, topo)
    assert np.all(S >= 0)
    for cluster in pattern.clusters:
        for u in cluster:
            for v in cluster:
                assert S[u, v] == 0.0


def test_interference_is_S_times_p(topo, pattern):
    state = sample_channel(topo, 6, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    p = np.linspace(0.5, 3.5, 7)
    S = build_coupling_matrix(state, pre, topo)
    I = inter_cluster_interference(state, pre, p, topo)
    assert np.max(np.abs(I - S @ p)) < 1e-12


def test_coupling_matches_effective_gains(topo, pattern):
    state = sample_channel(topo, 7, 0)
    pre = compute_zf_precoders(state, pattern, topo)
    G = effective_gains(state, pre)
    S = build_coupling_matrix(state, pre, topo)
    # cross-cluster entries equal |G|^2
    assert S[0, 2] == pytest.approx(np.abs(G[0, 2]) ** 2)


def test_rate_formula():
    assert rate(np.array([3.0]), np.array([0.0]))[0] == pytest.approx(2.0)
    assert rate(np.array([3.0]), np.array([1.0]))[0] == pytest.approx(np.log2(2.5))
    assert rate(np.array([0.0]), np.array([5.0]))[0] == 0.0


def test_multiuser_cluster_zf(topo):
    # K=2 users per cell needs N_t >= 2; cluster of 2 cells serves 4 users
    topo2 = build_hex_topology(1, 500.0, 2, 4, rng_seed=1)
    pattern = ClusteringPattern(((0, 1),) + tuple((b,) for b in range(2, 7)), 1)
    state = sample_channel(topo2, 0, 0)
    pre = compute_zf_precoders(state, pattern, topo2)
    desired_err, cross = zf_residuals(state, pre, topo2)
    assert np.all(desired_err < 1e-9)
    assert np.all(cross < 1e-9)
