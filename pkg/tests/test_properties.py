import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netmimo.game import (
    GameInstance,
    waterfill_best_response,
    weighted_max_norm,
)
from netmimo.queueing import QueueState, step_queue_packets_from_uniforms

probs = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def queue_steps(draw):
    n = draw(st.integers(1, 20))
    cap = draw(st.integers(1, 12))
    q = draw(arrays(np.int64, n, elements=st.integers(0, cap)))
    lam = draw(st.floats(0.0, 0.9))
    mu = draw(st.floats(0.0, 1.0))
    mu = min(mu, 1.0 - lam)
    arrivals = draw(arrays(np.int64, n, elements=st.integers(0, 1)))
    u_dep = draw(arrays(np.float64, n, elements=probs))
    return QueueState(q, cap), np.full(n, mu), arrivals, u_dep, lam


@given(queue_steps())
@settings(max_examples=200, deadline=None)
def test_queue_step_moves_at_most_one(step):
    queue, mu, arrivals, u_dep, lam = step
    new, drops = step_queue_packets_from_uniforms(queue, mu, arrivals, u_dep, lam)
    assert np.all(np.abs(new.q - queue.q) <= 1)
    assert np.all(new.q >= 0) and np.all(new.q <= queue.capacity)
    # drops only happen on arrivals at a full queue
    assert drops == int(np.sum((queue.q == queue.capacity) & (arrivals == 1)))
    # no spontaneous departures from empty queues
    assert np.all(new.q[queue.q == 0] >= 0)


@st.composite
def game_instances(draw):
    n = draw(st.integers(1, 6))
    alpha = draw(st.floats(0.05, 0.95))
    S = draw(
        arrays(np.float64, (n, n), elements=st.floats(0.0, 1.0, allow_nan=False))
    )
    np.fill_diagonal(S, 0.0)
    norm = weighted_max_norm(S, np.ones(n))
    S = S * (alpha / norm) if norm > 1e-9 else np.zeros_like(S)
    num = draw(arrays(np.float64, n, elements=st.floats(0.0, 10.0)))
    den = draw(arrays(np.float64, n, elements=st.floats(0.1, 5.0)))
    return GameInstance(coupling=S, numerators=num, denominators=den, p_max=1e3)


@given(game_instances())
@settings(max_examples=200, deadline=None)
def test_best_response_is_monotone_and_bounded(inst):
    n = inst.num_users
    p_lo = waterfill_best_response(inst, np.zeros(n))
    p_hi = waterfill_best_response(inst, np.full(n, 10.0))
    # more interference never increases the water-filled power
    assert np.all(p_hi <= p_lo + 1e-12)
    assert np.all(p_lo >= 0.0) and np.all(p_lo <= inst.p_max)


@given(game_instances(), st.integers(0, 2**31 - 1))
@settings(max_examples=100, deadline=None)
def test_best_response_contracts_in_max_norm(inst, seed):
    rng = np.random.default_rng(seed)
    alpha = weighted_max_norm(inst.coupling, np.ones(inst.num_users))
    x = rng.uniform(0.0, 50.0, inst.num_users)
    y = rng.uniform(0.0, 50.0, inst.num_users)
    fx = waterfill_best_response(inst, x)
    fy = waterfill_best_response(inst, y)
    lhs = float(np.max(np.abs(fx - fy)))
    rhs = alpha * float(np.max(np.abs(x - y)))
    assert lhs <= rhs + 1e-9
