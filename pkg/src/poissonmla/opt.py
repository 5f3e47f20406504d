"""Exact offline optimum for small sequences and closed-form cost bounds.

Exactness of the block formulation: with linear delay and time-invariant
weights, a service serving a fixed block of requests is best placed at the
block's latest arrival, so an optimal schedule is determined by a set
partition of the requests.
"""

from __future__ import annotations

import enum
import math
from typing import Iterator

import numpy as np

from . import kernels
from .errors import CapacityError, InputError
from .schedule import CostBreakdown, RequestSequence, Schedule, schedule_cost
from .tree import Instance, Tree, heaviness, is_heavy, minimal_subtree_weight

MAX_REQUESTS = 12
ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)


def enumerate_set_partitions(m: int) -> Iterator[list[int]]:
    """Restricted-growth strings of length m in lexicographic order."""
    if m == 0:
        yield []
        return
    a = [0] * m
    b = [0] * m  # b[i] = 1 + max(a[:i])
    for i in range(1, m):
        b[i] = 1
    while True:
        yield list(a)
        i = m - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, m):
            a[j] = 0
            b[j] = max(b[j - 1], a[j - 1] + 1)


def _blocks_to_schedule(times: np.ndarray, blocks: list[list[int]]) -> Schedule:
    blocks = sorted(blocks, key=lambda blk: (max(times[r] for r in blk), blk[0]))
    return Schedule.from_services([(float(max(times[r] for r in blk)), blk) for blk in blocks], len(times))


def _guard(m: int, max_requests: int):
    if m > max_requests:
        raise CapacityError(
            f"{m} requests exceed the exact-OPT limit of {max_requests}; use the single-edge DP or the bound evaluators"
        )


def edge_groups(tree: Tree, locations) -> tuple[np.ndarray, np.ndarray]:
    """Compress the union of root-paths into groups of edges used by the same requests.

    Returns (masks, weights): ``masks[g]`` has bit r set when request r's
    root-path contains the edges of group g.
    """
    sig: dict[int, int] = {}
    for r, u in enumerate(np.asarray(locations).tolist()):
        while u != tree.root:
            sig[u] = sig.get(u, 0) | (1 << r)
            u = int(tree.parent[u])
    groups: dict[int, float] = {}
    for v, mk in sig.items():
        groups[mk] = groups.get(mk, 0.0) + float(tree.weight[v])
    keys = sorted(groups)
    return np.array(keys, dtype=np.uint64), np.array([groups[k] for k in keys], dtype=np.float64)


def opt_bruteforce(sequence: RequestSequence, tree: Tree, method: str = "dp",
                   max_requests: int = MAX_REQUESTS, backend: str | None = None) -> tuple[Schedule, CostBreakdown]:
    """Minimum-cost schedule by exhausting set partitions of the requests.

    ``method="dp"`` runs the subset recursion (first block holds the lowest
    unassigned request); ``method="enumerate"`` walks every restricted-growth
    string and is kept as an independent check.
    """
    m = len(sequence)
    _guard(m, max_requests)
    times = sequence.times
    if m == 0:
        sch = Schedule([], [])
        return sch, CostBreakdown(0.0, 0.0)
    if method == "dp":
        masks, gw = edge_groups(tree, sequence.locations)
        _, choice = kernels.opt_subset_dp(masks, gw, times, backend=backend)
        blocks = []
        S = (1 << m) - 1
        while S:
            blk = int(choice[S])
            blocks.append([r for r in range(m) if blk >> r & 1])
            S ^= blk
    elif method == "enumerate":
        blocks = _enumerate_best(sequence, tree)
    else:
        raise InputError(f"unknown method {method!r}")
    sch = _blocks_to_schedule(times, blocks)
    return sch, schedule_cost(sch, tree, sequence)


def _enumerate_best(sequence: RequestSequence, tree: Tree) -> list[list[int]]:
    times = sequence.times.tolist()
    locs = sequence.locations.tolist()
    m = len(times)
    best = math.inf
    best_blocks = None
    for rgs in enumerate_set_partitions(m):
        k = max(rgs) + 1
        blocks: list[list[int]] = [[] for _ in range(k)]
        for r, b in enumerate(rgs):
            blocks[b].append(r)
        cost = 0.0
        for blk in blocks:
            tmax = max(times[r] for r in blk)
            cost += minimal_subtree_weight(tree, [locs[r] for r in blk])
            cost += sum(tmax - times[r] for r in blk)
        if cost < best:
            best = cost
            best_blocks = blocks
    return best_blocks


def opt_cost(sequence: RequestSequence, tree: Tree, max_requests: int = MAX_REQUESTS) -> float:
    """Optimal total cost only (no schedule reconstruction)."""
    m = len(sequence)
    _guard(m, max_requests)
    if m == 0:
        return 0.0
    masks, gw = edge_groups(tree, sequence.locations)
    cost, _ = kernels.opt_subset_dp(masks, gw, sequence.times)
    return cost


def _single_edge_weight(tree_or_weight) -> float:
    if isinstance(tree_or_weight, Tree):
        if tree_or_weight.n != 2:
            raise InputError(f"single-edge DP needs a one-edge tree, got {tree_or_weight.n} vertices")
        return float(tree_or_weight.weight.sum())
    w = float(tree_or_weight)
    if not w > 0:
        raise InputError("edge weight must be positive")
    return w


def opt_single_edge_dp(sequence: RequestSequence, tree_or_weight) -> float:
    """O(m^2) optimum on one edge: an optimal partition uses time-consecutive blocks."""
    w = _single_edge_weight(tree_or_weight)
    t = sequence.times
    m = t.size
    if m == 0:
        return 0.0
    prefix = np.concatenate(([0.0], np.cumsum(t)))
    f = np.full(m + 1, np.inf)
    f[0] = 0.0
    for j in range(1, m + 1):
        i = np.arange(j)
        cand = f[:j] + w + (j - i) * t[j - 1] - (prefix[j] - prefix[:j])
        f[j] = cand.min()
    return float(f[m])


class LowerBound(str, enum.Enum):
    SINGLE_EDGE_LIGHT = "SingleEdgeLight"
    SINGLE_EDGE_HEAVY = "SingleEdgeHeavy"
    LIGHT = "Light"
    HEAVY_CLUSTER = "HeavyCluster"
    GEN_COMBINED = "GenCombined"


class UpperBound(str, enum.Enum):
    INSTANT_LIGHT = "InstantLight"
    PLAN_HEAVY = "PlanHeavy"
    GEN = "Gen"


def single_edge_light_bound(pi: float, tau: float) -> float:
    return 0.5 * ONE_MINUS_INV_E * tau * pi


def single_edge_heavy_bound(pi: float, tau: float) -> float:
    return 3.0 / (8.0 * math.sqrt(2.0)) * tau * math.sqrt(pi)


def light_bound(pi: float, tau: float) -> float:
    return 3.0 / 16.0 * ONE_MINUS_INV_E * tau * pi


def _single_edge_pi(instance: Instance) -> float:
    if instance.tree.n != 2:
        raise InputError("instance is not a single edge")
    return heaviness(instance)


def lower_bound(instance: Instance, tau: float, kind, plan=None, gen=None) -> float:
    """Closed-form lower bound on the expected optimal cost over ``[0, tau]``."""
    kind = LowerBound(kind)
    if not tau > 0:
        raise InputError("tau must be positive")
    if kind is LowerBound.SINGLE_EDGE_LIGHT:
        pi = _single_edge_pi(instance)
        if pi > 1:
            raise InputError(f"SingleEdgeLight needs pi <= 1, got {pi}")
        return single_edge_light_bound(pi, tau)
    if kind is LowerBound.SINGLE_EDGE_HEAVY:
        pi = _single_edge_pi(instance)
        # at pi == 1 this value sits below the light-case bound, so it is still valid
        if not pi >= 1:
            raise InputError(f"SingleEdgeHeavy needs pi >= 1, got {pi}")
        return single_edge_heavy_bound(pi, tau)
    if kind is LowerBound.LIGHT:
        pi = heaviness(instance)
        if pi > 1:
            raise InputError(f"Light needs pi <= 1, got {pi}")
        return light_bound(pi, tau)
    if kind is LowerBound.HEAVY_CLUSTER:
        if not is_heavy(instance):
            raise InputError("HeavyCluster needs a heavy instance")
        if plan is None:
            from .plan import build_plan

            plan = build_plan(instance)
        return float(3.0 / 16.0 * np.sum(plan.weights * tau / plan.periods))
    if gen is None:
        from .gen import GenScheduler

        gen = GenScheduler(instance)
    return 3.0 / 16.0 * ONE_MINUS_INV_E * tau * gen.pi_prime_total()


def upper_bound_formulas(instance: Instance, tau: float, kind, plan=None, gen=None) -> float:
    """Closed-form expected-cost value (or bound) of the online algorithms over ``[0, tau]``."""
    kind = UpperBound(kind)
    if not tau > 0:
        raise InputError("tau must be positive")
    if kind is UpperBound.INSTANT_LIGHT:
        pi = heaviness(instance)
        if pi > 1:
            raise InputError(f"InstantLight needs pi <= 1, got {pi}")
        return tau * pi
    if kind is UpperBound.PLAN_HEAVY:
        if not is_heavy(instance):
            raise InputError("PlanHeavy needs a heavy instance")
        from .plan import build_plan, plan_upper_bound

        return plan_upper_bound(plan if plan is not None else build_plan(instance), tau)
    from .gen import GenScheduler, gen_plan_upper_bound

    return gen_plan_upper_bound(gen if gen is not None else GenScheduler(instance), tau)
