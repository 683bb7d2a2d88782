"""Acceptance checks, one line each, printed in the pytest terminal summary.

Runs the full-size scenarios (K = 10000); expect several minutes in total.
"""
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from bwshare.arrivals import ArrivalModel, make_sampler
from bwshare.experiments import ScenarioSpec, Sweep, fig3_spec, fig4_spec, fig5_spec, replication_seed, run_scenario, summarize
from bwshare.metrics import Tolerances, debt_checkpoints, running_mean, sharing_satisfied
from bwshare.model import DebtState, PeriodState, SystemConfig, validate_decision
from bwshare.oracle import brute_force_optimum
from bwshare.policy import objective, solve_period, update_debts
from bwshare.queueing import QueueParams, g_pool, p_succ
from bwshare.simulator import RunConfig, run

from conftest import report

pytestmark = pytest.mark.slow

REPS = 10


def test_oracle_equivalence():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    mismatches = 0
    n = 1000
    for _ in range(n):
        R = int(rng.integers(1, 3))
        cp = rng.integers(0, 5, size=(2, R)).tolist()
        N = int(np.sum(cp))
        cfg = SystemConfig.build(
            operators=2, regions=R, clients_per=cp, period_length=int(rng.integers(1, 4)), horizon=1,
            delivery_prob=rng.uniform(0.5, 1.0, N).tolist() if N else 1.0,
        )
        state = PeriodState.build(cfg, rng.integers(0, 2, N).tolist() if N else [])
        debts = DebtState.build(cfg, rng.uniform(0, 5, N).tolist() if N else [], rng.uniform(0, 5, (2, 2)))
        got = objective(cfg, debts, solve_period(cfg, state, debts), exact=True)
        mismatches += got != brute_force_optimum(cfg, state, debts).value
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    assert report("oracle equivalence", ok, f"{n} instances, {mismatches} mismatches, {elapsed:.1f} s (< 60 s)")


def test_constraint_soundness():
    rng = np.random.default_rng(2)
    periods = violations = 0
    target = 100_000
    while periods < target:
        O = int(rng.integers(2, 5))
        R = int(rng.integers(1, 4))
        cfg = SystemConfig.build(
            operators=O, regions=R, clients_per=rng.integers(0, 9, size=(O, R)).tolist(),
            period_length=int(rng.integers(1, 7)), horizon=500,
            delivery_prob=float(rng.uniform(0.5, 1.0)), throughput_req=float(rng.uniform(0, 0.6)),
            sharing_bound=float(rng.uniform(0, 0.05)),
            sharing_cap=None if rng.random() < 0.5 else int(rng.integers(0, 4)),
        )
        models = {(i, r): ArrivalModel("bernoulli", float(rng.uniform(0, 1))) for i in range(O) for r in range(R)}
        sampler = make_sampler(cfg, models, int(rng.integers(2**32)))
        debts = DebtState.zeros(cfg)
        flips = rng.random((cfg.horizon, cfg.n_clients)) < cfg.delivery_prob
        for k in range(cfg.horizon):
            a, _ = sampler.next_period()
            state = PeriodState.build(cfg, a, flips[k].astype(np.int8))
            d = solve_period(cfg, state, debts)
            violations += len(validate_decision(cfg, state, d))
            debts = update_debts(cfg, debts, d, state)
            periods += 1
    assert report("constraint soundness", violations == 0, f"{periods} periods, {violations} violations")


def test_analytic_formulas():
    e1 = abs(p_succ(QueueParams(1, 0, 1)) - (1 - np.exp(-1)))
    cont = max(abs(p_succ(QueueParams(1, 1 + s, 1)) - 0.5) for s in (1e-8, -1e-8))
    g = [g_pool(QueueParams(1, 0.9, d)) for d in np.arange(0.5, 10.01, 0.5)]
    dec = all(a > b for a, b in zip(g, g[1:]))
    ok = e1 < 1e-12 and cont < 1e-6 and dec
    assert report("analytic formulas", ok,
                  f"|p(1,0,1)-(1-1/e)|={e1:.1e}, continuity err={cont:.1e}, g_pool decreasing on 0.5..10: {dec}")


def _baseline(beta, policy, seed=1):
    spec = fig4_spec(sweep=Sweep("imbalance", (beta,)))
    pt = spec.points()[0]
    cfg = spec.system(pt)
    return cfg, RunConfig(cfg, spec.models(pt), policy, seed)


def test_sharing_balance():
    cfg, rc = _baseline(0.1, "sharing")
    start = time.perf_counter()
    rec = run(rc)
    elapsed = time.perf_counter() - start
    ok_pairs = all(sharing_satisfied(rec, cfg, Tolerances(xi2=0.01)).values())
    worst = float(rec.net_sharing.max())
    ok = ok_pairs and elapsed < 10
    assert report("sharing balance", ok, f"beta1=0.1: max net sharing {worst:.4f} <= 0.011, run {elapsed:.1f} s (< 10 s)")


def test_debt_stability():
    # rates 0 and 0.8 crossed over regions: each region's load is 0.8 of its
    # pooled 2T slots, so the system is strictly feasible only with sharing
    spec = ScenarioSpec(rate=((0.0, 0.8), (0.8, 0.0)))
    pt = spec.points()[0]
    cfg, models = spec.system(pt), spec.models(pt)
    K = cfg.horizon
    checkpoints, lyap = [], []
    for rep in range(REPS):
        rec = run(RunConfig(cfg, models, "sharing", replication_seed(0, rep)))
        checkpoints.append(debt_checkpoints(rec, (K // 4, K // 2, K), window=K // 4))
        rm = running_mean(rec.lyapunov_trace)
        lyap.append(rm[K - 1] / rm[K // 2 - 1])
    c = np.mean(checkpoints, axis=0)
    ratio = c[2] / c[1]
    lyap_ratio = float(np.mean(lyap))
    ok = ratio < 1.1 and lyap_ratio < 1.1
    assert report("debt stability", ok,
                  f"max delta at K/4, K/2, K = {c[0]:.2f}, {c[1]:.2f}, {c[2]:.2f}; final/mid {ratio:.3f} (< 1.1); "
                  f"Lyapunov running mean final/mid {lyap_ratio:.3f}")


@pytest.fixture(scope="module")
def fig4_rows():
    return run_scenario(fig4_spec(replications=REPS))


def test_fig3_cap_monotone():
    rows = run_scenario(fig3_spec(replications=REPS))
    m = summarize(rows)
    caps = sorted(k[1] for k in m)
    means = [m[5, c] for c in caps]
    rho = spearmanr(caps, means)[0]
    zero = all(r["improvement_percent"] == 0.0 for r in rows if r["value"] == 0)
    ok = rho > 0.9 and zero
    assert report("fig3 cap sweep", ok,
                  f"Spearman {rho:.3f} (> 0.9), means {[round(x, 2) for x in means]}, L=0 exactly 0: {zero}")


def test_fig4a_imbalance(fig4_rows):
    m = summarize(fig4_rows)
    hi, lo = m[5, 0.1], m[5, 0.4]
    assert report("fig4(a) imbalance", hi > lo, f"improvement beta1=0.1 {hi:.2f}% > beta1=0.4 {lo:.2f}%")


def test_fig4b_shared_slots(fig4_rows):
    s = summarize(fig4_rows, "avg_shared_per_period")
    betas = sorted(k[1] for k in s)
    vals = [s[5, b] for b in betas]
    decreasing = all(a > b for a, b in zip(vals, vals[1:]))
    at_half = s[5, 0.5]
    ok = decreasing and at_half < 0.05
    assert report("fig4(b) shared slots", ok,
                  f"decreasing in beta1: {decreasing} {[round(v, 3) for v in vals]}; at beta1=0.5 {at_half:.3f} (< 0.05)")


def test_headline_magnitude(fig4_rows):
    m = summarize(fig4_rows)
    best = max(m.items(), key=lambda kv: kv[1])
    assert report("headline magnitude", best[1] >= 40, f"max improvement {best[1]:.1f}% at beta1={best[0][1]} (>= 40%)")


def test_fig5_interior_peak():
    spec = fig5_spec(sweep=Sweep("load", (0.2, 1.0, 1.2, 1.4, 2.0), (4,)), replications=5)
    rows = run_scenario(spec)
    m = summarize(rows)
    interior = float(np.mean([m[4, g] for g in (1.0, 1.2, 1.4)]))
    lo, hi = m[4, 0.2], m[4, 2.0]
    clamped = any(r["clamped"] for r in rows if r["value"] == 2.0)
    ok = interior > lo and interior > hi and clamped
    assert report("fig5 interior peak", ok,
                  f"T=4: interior mean {interior:.2f}% vs gamma=0.2 {lo:.2f}% and gamma=2.0 {hi:.2f}% (clamped: {clamped})")


def test_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "bwshare.cli", "fig4", "--seed", "42", "--out", str(out)],
                       check=True, capture_output=True)
        outs.append((out / "fig4.csv").read_bytes())
    same = outs[0] == outs[1]
    assert report("determinism", same, f"fig4 --seed 42 twice: byte-identical CSVs ({len(outs[0])} bytes)")


def test_performance():
    cfg, rc = _baseline(0.1, "sharing", seed=3)
    start = time.perf_counter()
    run(rc)
    elapsed = time.perf_counter() - start
    assert report("performance", elapsed < 10, f"one K=10000 run of 2x2x10 clients, T=5: {elapsed:.2f} s (< 10 s)")
