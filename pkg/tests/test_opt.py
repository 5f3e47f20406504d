import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poissonmla.arrivals import ArrivalConfig, generate
from poissonmla.baselines import fixed_period, greedy, instant
from poissonmla.errors import CapacityError, InputError
from poissonmla.gen import GenScheduler
from poissonmla.opt import (LowerBound, UpperBound, enumerate_set_partitions, light_bound, lower_bound,
                            opt_bruteforce, opt_cost, single_edge_light_bound, opt_single_edge_dp, upper_bound_formulas)
from poissonmla.plan import build_plan, plan_schedule
from poissonmla.schedule import RequestSequence, schedule_cost
from poissonmla.tree import Instance, Tree, single_edge

from conftest import instances

BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]


def test_set_partition_counts_and_order():
    for m, b in enumerate(BELL):
        rgs = list(enumerate_set_partitions(m))
        assert len(rgs) == b
        assert len({tuple(r) for r in rgs}) == b
    assert [tuple(r) for r in enumerate_set_partitions(3)] == [
        (0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (0, 1, 2)]


def test_worked_example():
    t = single_edge(1, 1).tree
    seq = RequestSequence([0.2, 0.5, 1.4], [1, 1, 1], 2.0)
    for method in ("dp", "enumerate"):
        sch, c = opt_bruteforce(seq, t, method=method)
        assert c.total == pytest.approx(2.3, abs=1e-12)
        assert c.weight == 2 and c.delay == pytest.approx(0.3)
    assert opt_single_edge_dp(seq, 1.0) == pytest.approx(2.3, abs=1e-12)
    assert opt_single_edge_dp(seq, t) == pytest.approx(2.3, abs=1e-12)


def test_trivial_cases():
    t = Tree([-1, 0, 1], [0, 1.5, 2.0])
    assert opt_cost(RequestSequence([0.3], [2], 1.0), t) == pytest.approx(3.5)
    assert opt_cost(RequestSequence([], [], 1.0), t) == 0
    assert opt_single_edge_dp(RequestSequence([0.4] * 5, [1] * 5, 1.0), 2.0) == 2.0
    with pytest.raises(InputError):
        opt_single_edge_dp(RequestSequence([0.3], [2], 1.0), t)


def test_capacity_guard():
    t = single_edge(1, 1).tree
    seq = RequestSequence(np.linspace(0, 1, 13), [1] * 13, 1.0)
    with pytest.raises(CapacityError):
        opt_bruteforce(seq, t)
    with pytest.raises(InputError):
        opt_bruteforce(RequestSequence([0.1], [1], 1.0), t, method="magic")


@settings(max_examples=60, deadline=None)
@given(instances(max_n=7), st.integers(0, 2**31 - 1))
def test_dp_matches_enumeration(inst, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, 8))
    times = np.sort(rng.uniform(0, 3, m))
    seq = RequestSequence(times, rng.integers(1, inst.tree.n, m), 3.0)
    s1, c1 = opt_bruteforce(seq, inst.tree, method="dp")
    s2, c2 = opt_bruteforce(seq, inst.tree, method="enumerate")
    assert c1.total == pytest.approx(c2.total, abs=1e-12)
    s1.validate(seq)
    assert schedule_cost(s1, inst.tree, seq).total == pytest.approx(c1.total, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.1, 4.0), st.integers(0, 10), st.integers(0, 2**31 - 1))
def test_single_edge_dp_matches_bruteforce(w, m, seed):
    rng = np.random.default_rng(seed)
    seq = RequestSequence(np.sort(rng.uniform(0, 5, m)), [1] * m, 5.0)
    assert abs(opt_single_edge_dp(seq, w) - opt_cost(seq, single_edge(w, 1).tree)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(instances(max_n=7), st.integers(0, 1000))
def test_opt_dominates_every_scheduler(inst, seed):
    tau = 3.0
    seq = generate(ArrivalConfig(inst, tau, seed))
    if len(seq) > 10:
        seq = seq.prefix(seq.times[9])
    tree = inst.tree
    best = opt_cost(seq, tree)
    cands = [instant(seq), greedy(seq, tree), fixed_period(seq, tree, 0.7), GenScheduler(inst).schedule(seq)]
    for s in cands:
        assert schedule_cost(s, tree, seq).total >= best - 1e-12


def test_lower_bound_examples():
    assert lower_bound(single_edge(1, 1), 100, "SingleEdgeHeavy") == pytest.approx(26.5165, abs=1e-4)
    assert lower_bound(single_edge(0.5, 1), 100, LowerBound.SINGLE_EDGE_LIGHT) == pytest.approx(15.803, abs=1e-3)
    # instances need positive total rate, so pi = 0 is only reachable through the formulas
    assert light_bound(0.0, 10) == 0 and single_edge_light_bound(0.0, 10) == 0
    with pytest.raises(InputError, match="pi <= 1"):
        lower_bound(single_edge(2, 1), 10, "Light")
    with pytest.raises(InputError, match="heavy"):
        lower_bound(single_edge(0.5, 1), 10, "HeavyCluster")
    with pytest.raises(ValueError):
        lower_bound(single_edge(0.5, 1), 10, "Nope")


def test_heavy_cluster_and_gen_bounds():
    inst = single_edge(2, 1)
    plan = build_plan(inst)
    assert lower_bound(inst, 100, "HeavyCluster", plan=plan) == pytest.approx(3 / 16 * 2 * 50)
    light = single_edge(0.5, 1)
    expected = 3 / 16 * (1 - math.exp(-1)) * 100 * 0.5
    assert lower_bound(light, 100, "GenCombined") == pytest.approx(expected)


def test_upper_bound_examples():
    assert upper_bound_formulas(single_edge(0.5, 1), 100, UpperBound.INSTANT_LIGHT) == pytest.approx(50)
    assert upper_bound_formulas(single_edge(2, 1), 100, "PlanHeavy") == pytest.approx(200)
    light = Instance(Tree([-1, 0, 1], [0, 0.5, 0.5]), [0, 0.2, 0.3])
    assert upper_bound_formulas(light, 10, "Gen") == pytest.approx(upper_bound_formulas(light, 10, "InstantLight"))
