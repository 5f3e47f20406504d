"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from poissonmla.arrivals import ArrivalConfig, generate, statistical_selftest
from poissonmla.baselines import fixed_period, greedy, instant
from poissonmla.experiment import ExperimentConfig, appendix_b_separation, run_experiment
from poissonmla.gen import augmented_violations, balanced_partition, build_heavy_instance, partition_violations, split_root
from poissonmla.instances import heavy_random, light_random, random_tree
from poissonmla.opt import lower_bound, opt_bruteforce, opt_single_edge_dp
from poissonmla.plan import build_plan, expected_blind_cost, plan_schedule, plan_violations
from poissonmla.schedule import RequestSequence, schedule_cost
from poissonmla.tree import Classification, classify, single_edge

from oracles import greedy_stepping

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []

INSTANT_BOUND = 16.0 / (3.0 - 3.0 * math.exp(-1.0))
PLAN_BOUND = 64.0 / 3.0
GEN_BOUND = 210.0


def report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def test_criterion_01_arrival_model():
    t0 = time.perf_counter()
    rep = statistical_selftest(single_edge(1, 2), 5.0, 100_000, seed=2024)
    elapsed = time.perf_counter() - t0
    checks = {c.name: c for c in rep.checks}
    parts = []
    for name in ("mean_count", "mean_terminal_delay", "ks_uniform", "p_count_at_least_mean"):
        c = checks[name]
        parts.append(f"{name}={c.observed:.4g}({'ok' if c.passed else 'bad'})")
    assert checks["mean_count"].expected == 10 and checks["mean_terminal_delay"].expected == 25
    ok = rep.passed and all(c.passed is True for c in rep.checks) and elapsed < 60
    report(1, ok, " ".join(parts) + f" time={elapsed:.1f}s")


def test_criterion_02_single_edge_strategies():
    tau, trials = 64.0, 10_000
    light = single_edge(0.5, 1)
    cfg = ArrivalConfig(light, tau, 1)
    ci = [schedule_cost(instant(s), light.tree, s, validate=False).total
          for s in (generate(cfg, k) for k in range(trials))]
    heavy = single_edge(2, 1)
    cfg = ArrivalConfig(heavy, tau, 2)
    cp = [schedule_cost(fixed_period(s, heavy.tree, 2.0), heavy.tree, s, blind=True, validate=False).total
          for s in (generate(cfg, k) for k in range(trials))]
    mi, mp = np.mean(ci), np.mean(cp)
    ok = abs(mi / 32 - 1) <= 0.02 and abs(mp / 128 - 1) <= 0.02
    report(2, ok, f"INSTANT mean {mi:.3f} vs 32, periodic blind mean {mp:.3f} vs 128 (2% tolerance)")


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    enumerated = 0
    for _ in range(500):
        w = float(rng.uniform(0.1, 5.0))
        m = int(rng.integers(0, 11))
        seq = RequestSequence(np.sort(rng.uniform(0, 10, m)), [1] * m, 10.0)
        tree = single_edge(w, 1).tree
        a = opt_bruteforce(seq, tree)[1].total
        b = opt_single_edge_dp(seq, w)
        worst = max(worst, abs(a - b))
        if m <= 8:
            c = opt_bruteforce(seq, tree, method="enumerate")[1].total
            worst = max(worst, abs(c - b))
            enumerated += 1
    elapsed = time.perf_counter() - t0
    report(3, worst <= 1e-12 and elapsed < 120,
           f"max |bruteforce - interval DP| = {worst:.2e} over 500 sequences "
           f"({enumerated} also by literal enumeration), time={elapsed:.1f}s")


def test_criterion_04_lower_bound_soundness():
    out, ok = [], True
    for w, kind in ((0.5, "SingleEdgeLight"), (2.0, "SingleEdgeHeavy")):
        inst = single_edge(w, 1)
        rep = run_experiment(ExperimentConfig(inst, 4.0, trials=2000, seed=4, schedulers=["instant"]))
        lb = lower_bound(inst, 4.0, kind)
        good = rep.denom_mean >= lb - 3 * rep.denom_se
        ok &= good
        out.append(f"{kind}: E[OPT]={rep.denom_mean:.3f}+-{rep.denom_se:.3f} vs bound {lb:.3f}")
    report(4, ok, "; ".join(out))


def _opt_ratio_suite(num, make, scheduler, bound, trials=300, seed=0):
    rng = np.random.default_rng(seed)
    worst, worst_slack, ok = 0.0, 0.0, True
    for i in range(20):
        inst, tau = make(rng)
        assert inst.total_rate * tau <= 8 + 1e-9
        rep = run_experiment(ExperimentConfig(inst, tau, trials=trials, seed=1000 + i, schedulers=[scheduler]))
        r = rep.result(scheduler)
        ok &= r.ratio <= bound + 3 * r.ratio_se
        if r.ratio > worst:
            worst, worst_slack = r.ratio, r.ratio_se
    return ok, worst, worst_slack


def test_criterion_05_instant_light():
    def make(rng):
        inst = light_random(rng, int(rng.integers(2, 9)))
        assert classify(inst) is Classification.LIGHT
        return inst, 6.0 / inst.total_rate

    ok, worst, se = _opt_ratio_suite(5, make, "instant", INSTANT_BOUND, seed=5)
    report(5, ok, f"20 light instances: worst INSTANT/OPT = {worst:.3f} (+-{se:.3f}) vs {INSTANT_BOUND:.3f}")


def test_criterion_06_plan_heavy():
    rng = np.random.default_rng(6)
    ratio_ok, formula_ok = True, True
    worst, worst_dev, worst_exact, multi = 0.0, 0.0, 0.0, 0
    for i in range(20):
        inst = heavy_random(rng, int(rng.integers(2, 7)), max_load=8.0)
        plan = build_plan(inst)
        tau = 2.0 * float(plan.rounded_periods.max())
        rep = run_experiment(ExperimentConfig(inst, tau, trials=300, seed=2000 + i, schedulers=["plan:blind"]))
        r = rep.result("plan:blind")
        ratio_ok &= r.ratio <= PLAN_BOUND + 3 * r.ratio_se
        worst = max(worst, r.ratio)
        # blind mean against the closed form, on unconditioned draws
        cfg = ArrivalConfig(inst, tau, 3000 + i)
        blind = [schedule_cost(plan_schedule(s, plan), inst.tree, s, blind=True, validate=False).total
                 for s in (generate(cfg, k) for k in range(20_000))]
        target = 2.0 * float(np.sum(tau / plan.rounded_periods * plan.weights))
        dev = abs(np.mean(blind) / target - 1)
        worst_dev = max(worst_dev, dev)
        formula_ok &= dev <= 0.02
        # diagnostic only: the exact expectation sum (tau/p_hat)(w + lambda p_hat^2 / 2)
        worst_exact = max(worst_exact, abs(np.mean(blind) / expected_blind_cost(plan, tau) - 1))
        multi += plan.k > 1
    report(6, ratio_ok and formula_ok,
           f"worst PLAN(blind)/OPT = {worst:.3f} vs {PLAN_BOUND:.3f} ({'ok' if ratio_ok else 'bad'}); "
           f"worst |blind mean / 2 sum(tau/p_hat)w - 1| = {worst_dev:.3f} vs 0.02 "
           f"({'ok' if formula_ok else 'bad'}; {multi} multi-cluster plans; "
           f"vs exact expectation {worst_exact:.3f})")


def test_criterion_07_partition_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    bad_plan = bad_part = 0
    for _ in range(200):
        inst = heavy_random(rng, int(rng.integers(2, 12)))
        if plan_violations(build_plan(inst), inst):
            bad_plan += 1
    for _ in range(200):
        inst = random_tree(rng, int(rng.integers(2, 12)))
        for sub, _ in split_root(inst):
            p = balanced_partition(sub)
            errs = partition_violations(sub, p)
            if len(p.parts) > 1:
                aug = build_heavy_instance(sub, p)
                errs += augmented_violations(sub, p, aug)
                if classify(aug.instance) is not Classification.HEAVY:
                    errs.append("not heavy")
            bad_part += bool(errs)
    elapsed = time.perf_counter() - t0
    report(7, bad_plan == 0 and bad_part == 0 and elapsed < 60,
           f"plan failures {bad_plan}/200, partition/augmented failures {bad_part}, time={elapsed:.1f}s")


def test_criterion_08_gen_general():
    def make(rng):
        inst = random_tree(rng, int(rng.integers(2, 9)))
        return inst, 6.0 / inst.total_rate

    ok, worst, se = _opt_ratio_suite(8, make, "gen", GEN_BOUND, seed=8)
    report(8, ok, f"20 general instances: worst GEN/OPT = {worst:.3f} (+-{se:.3f}) vs {GEN_BOUND:.0f} "
                  f"(bound far from tight)")


def test_criterion_09_star_separation():
    tab = appendix_b_separation([16, 256, 4096], trials=1000, seed=9, periods=100)
    ok = True
    parts = []
    for r in tab.rows:
        di = abs(r.instant_mean / r.instant_theory - 1)
        dp = abs(r.plan_mean / r.plan_theory - 1)
        ok &= di <= 0.05 and dp <= 0.05
        parts.append(f"n={r.n}: dI={di:.3f} dP={dp:.3f} I/ALG={r.instant_over_alg:.3f} P/ALG={r.plan_over_alg:.3f}")
    ia = [r.instant_over_alg for r in tab.rows]
    pa = [r.plan_over_alg for r in tab.rows]
    ok &= all(a < b for a, b in zip(ia, ia[1:])) and all(a < b for a, b in zip(pa, pa[1:]))
    report(9, ok, "; ".join(parts))


def test_criterion_10_greedy_regression():
    cases = [
        ("single", single_edge(1.5, 1).tree, [1.0], [1], [2.5]),
        ("twin", single_edge(2.0, 1).tree, [1.0, 1.0], [1, 1], [2.0]),
    ]
    worst = 0.0
    for _, tree, times, locs, expected in cases:
        s = greedy(RequestSequence(times, locs, 10.0), tree)
        ref = greedy_stepping(times, locs, tree, dt=1e-4)
        assert s.times.tolist() == pytest.approx(expected, abs=1e-12)
        worst = max(worst, max(abs(a - b) for a, b in zip(s.times, ref)))
        assert len(ref) == s.n_services
    report(10, worst <= 1e-3, f"closed form vs 1e-4 stepping: max gap {worst:.2e} (tolerance 1e-3)")
