"""Acceptance suite: one criterion per test, one PASS/FAIL line each."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from netmimo import channel as chan
from netmimo import phy
from netmimo.config import SimConfig
from netmimo.game import (
    GameInstance,
    qsiwfa,
    waterfill_best_response,
    weighted_max_norm,
)
from netmimo.harness import run_episode, run_sweep, write_metrics_csv, write_trace_csv
from netmimo.learning import StepSizeSchedule, run_isolated_cluster_episode
from netmimo.oracle import (
    TinyInstance,
    closed_form_power,
    grid_search_power,
    joint_rvi,
    per_user_rvi,
    power_grid,
)
from netmimo.queueing import QueueState, birth_death_kernel, step_queue_packets
from netmimo.topology import build_hex_topology, enumerate_patterns

DATA = Path(__file__).resolve().parents[1] / "src" / "netmimo" / "data"


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


# -- criterion 1: zero-forcing correctness ------------------------------------


def test_criterion_1_zf_correctness():
    t0 = time.time()
    worst_desired = 0.0
    worst_cross = 0.0
    draws = 0
    for combo, (K, Nt) in enumerate([(1, 2), (2, 2), (2, 3), (3, 4), (4, 4)]):
        topology = build_hex_topology(
            num_rings=1, cell_radius=500.0, users_per_cell=K, antennas=Nt,
            rng_seed=combo,
        )
        catalog = enumerate_patterns(topology, 3)
        pattern = next(
            p for p in catalog.patterns if max(len(c) for c in p.clusters) == 3
        )
        slot = 0
        while draws < 200 * (combo + 1):
            slot += 1
            state = chan.sample_channel(topology, slot, combo, 0)
            try:
                pre = phy.compute_zf_precoders(state, pattern, topology)
            except phy.SingularChannelError:
                continue
            desired_err, cross = phy.zf_residuals(state, pre, topology)
            worst_desired = max(worst_desired, float(np.max(desired_err)))
            worst_cross = max(worst_cross, float(np.max(cross)))
            draws += 1
    elapsed = time.time() - t0
    ok = worst_desired <= 1e-9 and worst_cross <= 1e-9 and elapsed < 10.0
    _report(
        1,
        "ZF correctness",
        ok,
        f"{draws} draws, desired err {worst_desired:.2e}, cross {worst_cross:.2e}, "
        f"{elapsed:.1f}s",
    )


# -- criterion 2: birth-death kernel fidelity ---------------------------------


def test_criterion_2_kernel_fidelity():
    n = 100_000
    NQ = 9
    pairs = [(0.1, 0.05), (0.25, 0.7), (0.0, 0.3), (0.3, 0.0), (0.2, 0.8)]
    worst = 0.0
    rng = np.random.default_rng(42)
    for lam, mu in pairs:
        for q0 in (0, 4, NQ):
            qs = QueueState(np.full(n, q0, dtype=np.int64), NQ)
            arrivals = (rng.random(n) < lam).astype(np.int64)
            q1, _ = step_queue_packets(qs, np.full(n, mu), arrivals, rng, lam)
            kernel = birth_death_kernel(q0, lam, mu, NQ)
            for target, p in kernel.items():
                freq = float(np.mean(q1.q == target))
                se = np.sqrt(p * (1 - p) / n)
                dev = abs(freq - p) / se if se > 0 else (0.0 if freq == p else np.inf)
                worst = max(worst, dev)
    ok = worst <= 3.0
    _report(2, "kernel fidelity", ok, f"worst deviation {worst:.2f} sigma over {n} slots")


# -- criterion 3: QSIWFA contraction ------------------------------------------


def test_criterion_3_qsiwfa_contraction():
    rng = np.random.default_rng(7)
    worst_ratio_gap = -np.inf
    worst_residual = 0.0
    worst_gap = 0.0
    for _ in range(100):
        U = int(rng.integers(2, 7))
        alpha_target = float(rng.uniform(0.1, 0.9))
        S = rng.uniform(0.0, 1.0, (U, U))
        np.fill_diagonal(S, 0.0)
        S *= alpha_target / max(weighted_max_norm(S, np.ones(U)), 1e-12)
        inst = GameInstance(
            coupling=S,
            numerators=rng.uniform(0.5, 5.0, U),
            denominators=rng.uniform(0.2, 2.0, U),
        )
        alpha = weighted_max_norm(S, np.ones(U))
        res = qsiwfa(inst, tol=1e-10, max_iter=200)
        p_star = res.p
        worst_residual = max(worst_residual, res.residual)
        # per-round decay toward the fixed point
        p = np.zeros(U)
        err = float(np.max(np.abs(p - p_star)))
        for _round in range(200):
            p = waterfill_best_response(inst, p)
            err_next = float(np.max(np.abs(p - p_star)))
            if err < 1e-9:
                break
            worst_ratio_gap = max(worst_ratio_gap, err_next / err - (alpha + 0.05))
            err = err_next
        # uniqueness: a far-away initialization lands on the same point
        res2 = qsiwfa(inst, p_init=np.full(U, 100.0), tol=1e-10, max_iter=200)
        worst_gap = max(worst_gap, float(np.max(np.abs(res2.p - p_star))))
    ok = worst_ratio_gap <= 0.0 and worst_residual < 1e-8 and worst_gap < 2e-8
    _report(
        3,
        "QSIWFA contraction",
        ok,
        f"max decay excess {worst_ratio_gap:.2e}, residual {worst_residual:.2e}, "
        f"init gap {worst_gap:.2e}",
    )


# -- criterion 4: joint value decomposition -----------------------------------


def _random_tiny(rng: np.random.Generator) -> TinyInstance:
    lvl = 1.0 / np.sqrt(2.0)
    return TinyInstance.from_dict(
        {
            "sigma": rng.uniform(0.5, 1.5, (2, 1)).tolist(),
            "antennas": 2,
            "capacity": 3,
            "arrival_prob": rng.uniform(0.15, 0.25, 2).tolist(),
            "drain": rng.uniform(0.15, 0.25, 2).tolist(),
            "beta": rng.uniform(0.5, 1.5, 2).tolist(),
            "gamma": rng.uniform(0.5, 2.0, 1).tolist(),
            "power_budget": [4.0],
            "codebook_levels": [-lvl, lvl],
            "p_max": 100.0,
        }
    )


def test_criterion_4_decomposition():
    rng = np.random.default_rng(4)
    worst_v = 0.0
    worst_theta = 0.0
    for _ in range(10):
        inst = _random_tiny(rng)
        js = joint_rvi(inst)
        per = [per_user_rvi(inst, u) for u in range(inst.num_users)]
        V = js.values.reshape(inst.capacity + 1, inst.capacity + 1)
        sep = per[0].values[:, None] + per[1].values[None, :]
        worst_v = max(worst_v, float(np.max(np.abs(V - sep))))
        worst_theta = max(worst_theta, abs(js.theta - sum(p.theta for p in per)))
    ok = worst_v < 1e-8 and worst_theta < 1e-8
    _report(
        4,
        "value decomposition",
        ok,
        f"max per-state gap {worst_v:.2e}, theta gap {worst_theta:.2e} over 10 instances",
    )


# -- criterion 5: closed-form inner minimizer ---------------------------------


def test_criterion_5_closed_form_power():
    rng = np.random.default_rng(5)
    p_max = 1e3
    grid = power_grid(p_max)
    failures = 0
    for _ in range(1000):
        dv = rng.uniform(0.0, 100.0)
        gamma = rng.uniform(0.05, 5.0)
        wsq = rng.uniform(0.1, 10.0)
        interference = rng.uniform(0.0, 5.0)
        num = 0.2 * dv
        den = gamma * wsq
        p_cf = closed_form_power(num, den, interference, p_max)
        p_gs = grid_search_power(num, den, interference, grid)
        idx = int(np.argmin(np.abs(grid - p_gs)))
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, grid.size - 1)]
        if not (lo - 1e-12 <= p_cf <= hi + 1e-12):
            failures += 1
    ok = failures == 0
    _report(5, "closed-form power", ok, f"{failures}/1000 tuples off the grid bracket")


# -- criteria 6 & 7: learning vs oracle on the bundled tiny instance ----------


@pytest.fixture(scope="module")
def tiny_run():
    inst = TinyInstance.from_dict(json.loads((DATA / "tiny_instance.json").read_text()))
    schedule = StepSizeSchedule(scale_gamma=0.5)
    t0 = time.time()
    res = run_isolated_cluster_episode(inst, 200_000, seed=0, schedule=schedule)
    elapsed = time.time() - t0
    return inst, res, elapsed


def test_criterion_6_learning_vs_oracle(tiny_run):
    inst, res, elapsed = tiny_run
    ref = TinyInstance.from_dict(json.loads((DATA / "tiny_instance.json").read_text()))
    ref.gamma = res.gamma.copy()
    v_star = np.stack([per_user_rvi(ref, u).values for u in range(ref.num_users)])
    rel = float(np.max(np.abs(res.values - v_star)) / np.max(np.abs(v_star)))
    pinned = bool(np.all(res.values[:, 0] == 0.0))
    ok = rel <= 0.10 and pinned and elapsed < 120.0
    _report(
        6,
        "learning vs oracle",
        ok,
        f"rel sup-norm {rel:.3f} after 2e5 slots, reference pinned {pinned}, "
        f"{elapsed:.0f}s",
    )


def test_criterion_7_multiplier_feasibility(tiny_run):
    inst, res, _ = tiny_run
    T = res.per_bs_power.shape[0]
    window_power = res.per_bs_power[T // 2 :].mean(axis=0)
    rel = float(np.max(np.abs(window_power - inst.power_budget) / inst.power_budget))
    in_box = bool(
        np.all(res.gamma_trace >= 0.0) and np.all(res.gamma_trace <= 100.0)
    )
    ok = rel <= 0.05 and in_box
    _report(
        7,
        "multiplier feasibility",
        ok,
        f"windowed power {window_power}, budget {inst.power_budget}, "
        f"gap {rel:.1%}, gamma in [0, 100]: {in_box}",
    )


# -- criterion 8: delay-vs-power trends ---------------------------------------


def _ci(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / np.sqrt(values.size)
    return m - half, m + half


def test_criterion_8_delay_power_trends():
    t0 = time.time()
    budgets = [0.5, 1.0, 2.0, 4.0]
    seeds = list(range(10))
    schemes = ("proposed", "greedy", "static", "fca")
    base = SimConfig(slots=1500)
    rows = run_sweep(base, "power_budget", budgets, seeds, schemes)
    elapsed = time.time() - t0

    delay = {
        (s, b): np.array(
            [
                r.mean_delay_slots
                for r in rows
                if r.scheme == s and r.axis_value == b
            ]
        )
        for s in schemes
        for b in budgets
    }
    violations = []
    for s in schemes:
        for lo_b, hi_b in zip(budgets, budgets[1:]):
            a, b = delay[(s, lo_b)], delay[(s, hi_b)]
            if b.mean() > a.mean():
                ci_a, ci_b = _ci(a), _ci(b)
                if ci_b[0] > ci_a[1]:  # disjoint and in the wrong order
                    violations.append(f"{s}: delay rises {lo_b}->{hi_b}")
    order = ("proposed", "greedy", "static", "fca")
    for bgt in budgets:
        for better, worse in zip(order, order[1:]):
            a, b = delay[(better, bgt)], delay[(worse, bgt)]
            if a.mean() > b.mean():
                ci_a, ci_b = _ci(a), _ci(b)
                if ci_a[0] > ci_b[1]:
                    violations.append(f"P={bgt}: {better} > {worse}")
    ok = not violations and elapsed < 1800.0
    _report(
        8,
        "delay-power trends",
        ok,
        f"{len(seeds)} seeds x {len(budgets)} budgets x {len(schemes)} schemes, "
        f"violations {violations or 'none'}, {elapsed:.0f}s",
    )


# -- criterion 9: contraction satisfied fraction ------------------------------


def test_criterion_9_contraction_fraction():
    fractions = []
    for seed in range(3):
        cfg = SimConfig(slots=3000, scheme="proposed", seed=seed)
        metrics, _ = run_episode(cfg)
        fractions.append(metrics.contraction_fraction)
    mean_frac = float(np.mean(fractions))
    ok = mean_frac >= 0.9
    _report(
        9,
        "contraction fraction",
        ok,
        f"satisfied fraction {mean_frac:.3f} (threshold 0.9, seeds {fractions})",
    )


# -- criterion 10: determinism and Little's law -------------------------------


def test_criterion_10_determinism_littles_law(tmp_path):
    cfg = SimConfig(slots=1000, scheme="proposed", seed=0)
    blobs = []
    traces = []
    for run in range(2):
        metrics, trace = run_episode(cfg)
        mp = tmp_path / f"m{run}.csv"
        tp = tmp_path / f"t{run}.csv"
        write_metrics_csv([metrics], mp)
        write_trace_csv(trace, tp)
        blobs.append((mp.read_bytes(), tp.read_bytes()))
        traces.append((metrics, trace))
    identical = blobs[0] == blobs[1]

    metrics, trace = traces[0]
    warm = int(cfg.slots * cfg.warmup_fraction)
    mean_q = float(trace.queues[warm:].mean())
    lam_eff = cfg.arrival_prob - metrics.drop_rate
    littles = abs(metrics.mean_delay_slots * lam_eff - mean_q) <= 0.05 * max(
        mean_q, 1e-12
    )
    power_gap = abs(metrics.mean_power - float(trace.per_bs_power.mean()))
    ok = identical and littles and power_gap < 1e-9
    _report(
        10,
        "determinism + Little's law",
        ok,
        f"byte-identical {identical}, Little's-law ok {littles}, "
        f"power recompute gap {power_gap:.1e}",
    )
