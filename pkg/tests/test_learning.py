import json
from pathlib import Path

import numpy as np
import pytest

from netmimo.control import LagrangeMultipliers, PotentialStore
from netmimo.learning import (
    LearningObservation,
    StepSizeSchedule,
    run_isolated_cluster_episode,
    step_sizes,
    update_lm,
    update_potential,
)
from netmimo.oracle import TinyInstance

DATA = Path(__file__).resolve().parents[1] / "src" / "netmimo" / "data"


def _obs(queue, cost, mu_tau, arrival, ref_cost=0.0, ref_arrival=False):
    return LearningObservation(
        slot=0,
        cluster=(0,),
        user=(0, 0),
        queue=queue,
        cost_sample=cost,
        mu_tau=mu_tau,
        arrival=arrival,
        ref_cost=ref_cost,
        ref_arrival=ref_arrival,
    )


def test_step_size_values():
    s = StepSizeSchedule()
    assert s.eps_v(0) == pytest.approx(1.0)
    assert s.eps_v(99) == pytest.approx(0.06309573444801933, rel=1e-12)
    assert s.eps_gamma(999) == pytest.approx(9.976311574844398e-05, rel=1e-12)
    assert step_sizes(s, 99, 999) == (s.eps_v(99), s.eps_gamma(999))


def test_step_size_timescale_separation():
    # the slow step must vanish relative to the fast step
    s = StepSizeSchedule()
    n = 10**6
    assert s.eps_gamma(n) / s.eps_v(n) < 1e-3


def test_schedule_rejects_bad_exponents():
    with pytest.raises(ValueError):
        StepSizeSchedule(exponent_v=0.5)
    with pytest.raises(ValueError):
        StepSizeSchedule(exponent_v=0.95, exponent_gamma=0.9)
    with pytest.raises(ValueError):
        StepSizeSchedule(exponent_gamma=1.1)


def test_update_potential_basic_arithmetic():
    store = PotentialStore([(0,)], 1, 2, resolution=1)
    sched = StepSizeSchedule(scale_v=0.5)
    counts = {}
    update_potential(store, _obs(2, cost=2.0, mu_tau=0.0, arrival=False), sched, counts)
    v = store.table((0,), (0, 0))
    assert v.tolist() == [0.0, 0.0, 1.0]
    assert counts[((0,), (0, 0), 2)] == 1


def test_update_potential_all_terms():
    store = PotentialStore([(0,)], 1, 2, resolution=1)
    v = store.table((0,), (0, 0))
    v[:] = [0.0, 10.0, 20.0]
    sched = StepSizeSchedule(scale_v=1.0)
    # y_main = 0 + 0.5*(v0-v1) + (v2-v1) = 5; y_ref = 1 + (v1-v0) = 11
    update_potential(
        store,
        _obs(1, cost=0.0, mu_tau=0.5, arrival=True, ref_cost=1.0, ref_arrival=True),
        sched,
        {},
    )
    assert v.tolist() == [0.0, 4.0, 20.0]


def test_update_potential_visit_counts_shrink_steps():
    store = PotentialStore([(0,)], 1, 1, resolution=1)
    sched = StepSizeSchedule()
    counts = {}
    update_potential(store, _obs(1, cost=1.0, mu_tau=0.0, arrival=False), sched, counts)
    first = store.table((0,), (0, 0))[1]
    update_potential(store, _obs(1, cost=1.0, mu_tau=0.0, arrival=False), sched, counts)
    second = store.table((0,), (0, 0))[1] - first
    assert first == pytest.approx(1.0)
    assert second == pytest.approx(1.0 / 2**0.6)


def test_update_potential_rejects_off_anchor():
    store = PotentialStore([(0,)], 1, 9, resolution=3)
    with pytest.raises(ValueError):
        update_potential(
            store, _obs(4, cost=1.0, mu_tau=0.0, arrival=False), StepSizeSchedule(), {}
        )


def test_update_potential_keeps_reference_pinned():
    store = PotentialStore([(0,)], 1, 3, resolution=1)
    update_potential(
        store,
        _obs(0, cost=5.0, mu_tau=0.0, arrival=True, ref_cost=0.0, ref_arrival=False),
        StepSizeSchedule(),
        {},
    )
    assert store.table((0,), (0, 0))[0] == 0.0


def test_update_lm_ascent_and_projection():
    lms = LagrangeMultipliers(np.array([1.0]), bound=2.0)
    update_lm(lms, np.array([3.0]), np.array([1.0]), 0.1)
    assert lms.gamma[0] == pytest.approx(1.2)
    update_lm(lms, np.array([100.0]), np.array([0.0]), 1.0)
    assert lms.gamma[0] == 2.0  # clipped at the bound
    update_lm(lms, np.array([0.0]), np.array([100.0]), 1.0)
    assert lms.gamma[0] == 0.0
    with pytest.raises(ValueError):
        update_lm(lms, np.array([1.0]), np.array([1.0]), -0.1)


def _tiny():
    return TinyInstance.from_dict(json.loads((DATA / "tiny_instance.json").read_text()))


def test_isolated_cluster_episode_deterministic():
    inst = _tiny()
    a = run_isolated_cluster_episode(inst, 500, seed=7)
    b = run_isolated_cluster_episode(inst, 500, seed=7)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.gamma, b.gamma)
    assert np.array_equal(a.queues, b.queues)


def test_isolated_cluster_episode_seed_sensitivity():
    inst = _tiny()
    a = run_isolated_cluster_episode(inst, 500, seed=0)
    b = run_isolated_cluster_episode(inst, 500, seed=1)
    assert not np.array_equal(a.queues, b.queues)


def test_isolated_cluster_episode_invariants():
    inst = _tiny()
    res = run_isolated_cluster_episode(inst, 2000, seed=3)
    assert np.all(res.queues >= 0) and np.all(res.queues <= inst.capacity)
    assert np.all(res.gamma_trace >= 0.0) and np.all(res.gamma_trace <= 100.0)
    assert np.all(res.per_bs_power >= 0.0)
    assert np.all(res.values[:, 0] == 0.0)  # reference state stays pinned
    # monotone potentials: a longer queue is never cheaper under the delay cost
    assert np.all(np.diff(res.values, axis=1) >= -1e-9)
