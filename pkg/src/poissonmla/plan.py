"""PLAN: saturation clustering, power-of-two period rounding and the periodic schedule."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import tick_count
from .errors import ConstructionError, InputError
from .schedule import RequestSequence, Schedule
from .tree import Instance

SHARE_RTOL = 1e-9


@dataclass(frozen=True)
class Cluster:
    root: int
    members: tuple[int, ...]
    period: float
    weight: float
    rate: float


@dataclass(frozen=True)
class ClusterPlan:
    """Clusters in creation order with raw and rounded periods.

    ``members`` of the clusters partition the non-root vertices that have a
    positive-rate descendant (themselves included); the rest are listed in
    ``pruned`` and never receive requests.
    """

    n: int
    root: int
    clusters: tuple[Cluster, ...]
    shares: np.ndarray
    cluster_of: np.ndarray
    pruned: tuple[int, ...] = ()
    exponents: tuple[int, ...] | None = None
    diagnostics: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def periods(self) -> np.ndarray:
        return np.array([c.period for c in self.clusters])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.clusters])

    @property
    def rates(self) -> np.ndarray:
        return np.array([c.rate for c in self.clusters])

    @property
    def rounded(self) -> bool:
        return self.exponents is not None

    @property
    def rounded_periods(self) -> np.ndarray:
        if self.exponents is None:
            raise InputError("plan has not been rounded")
        p1 = self.clusters[0].period
        return np.array([p1 * 2.0 ** e for e in self.exponents])

    def to_dict(self) -> dict:
        d = {
            "root": self.root,
            "clusters": [
                {"root": c.root, "members": list(c.members), "period": c.period, "weight": c.weight, "rate": c.rate}
                for c in self.clusters
            ],
            "shares": {str(v): float(self.shares[v]) for v in range(self.n) if self.cluster_of[v] >= 0},
            "pruned": list(self.pruned),
            "diagnostics": list(self.diagnostics),
        }
        if self.exponents is not None:
            for c, e, ph in zip(d["clusters"], self.exponents, self.rounded_periods):
                c["exponent"] = e
                c["rounded_period"] = float(ph)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class _Sets:
    """Union-find over cooperating vertex sets with their saturation state."""

    def __init__(self, n):
        self.up = list(range(n))
        self.members = [[v] for v in range(n)]

    def find(self, v):
        up = self.up
        while up[v] != v:
            up[v] = up[up[v]]
            v = up[v]
        return v

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if len(self.members[a]) < len(self.members[b]):
            a, b = b, a
        self.up[b] = a
        self.members[a].extend(self.members[b])
        self.members[b] = []
        return a


def active_vertices(instance: Instance) -> np.ndarray:
    """Mask of non-root vertices with positive subtree rate."""
    tree = instance.tree
    act = instance.subtree_rates() > 0
    act[tree.root] = False
    return act


def saturation_partition(instance: Instance) -> ClusterPlan:
    """Cluster the tree by the saturation process; returns an unrounded plan.

    Each cooperating set with rate L saturates its target edge at pace L/2 t^2,
    so a residual W left at time t0 is used up at sqrt(t0^2 + 2W/L).  Events
    are processed by time, then deeper upper endpoint first, then vertex id.
    """
    tree = instance.tree
    n = tree.n
    lam = instance.rates
    parent = tree.parent
    act = active_vertices(instance)
    pruned = tuple(int(v) for v in range(n) if v != tree.root and not act[v])

    sets = _Sets(n)
    top = list(range(n))
    resid = tree.weight.astype(float).tolist()
    tref = [0.0] * n
    rate = lam.astype(float).tolist()
    version = [0] * n
    in_r = [False] * n
    in_r[tree.root] = True
    heap: list = []

    def push(rep):
        if rate[rep] <= 0:
            return
        x = top[rep]
        t = math.sqrt(tref[rep] ** 2 + 2.0 * resid[rep] / rate[rep])
        heapq.heappush(heap, (t, -int(tree.depth[parent[x]]), x, version[rep], rep))

    for v in range(n):
        if act[v]:
            push(v)

    remaining = int(act.sum())
    clusters: list[Cluster] = []
    shares = np.full(n, np.nan)
    cluster_of = np.full(n, -1, dtype=np.int64)
    while remaining:
        if not heap:
            raise ConstructionError("saturation stalled: a component has zero total rate")
        t, _, x, ver, rep = heapq.heappop(heap)
        if ver != version[rep] or sets.find(rep) != rep:
            continue
        y = int(parent[x])
        version[rep] += 1
        if in_r[y]:
            mem = tuple(sorted(sets.members[rep]))
            ci = len(clusters)
            w = float(sum(tree.weight[v] for v in mem))
            lam_c = float(sum(lam[v] for v in mem))
            for v in mem:
                in_r[v] = True
                cluster_of[v] = ci
                shares[v] = lam[v] / 2.0 * t * t
            clusters.append(Cluster(root=y, members=mem, period=float(t), weight=w, rate=lam_c))
            remaining -= len(mem)
            rate[rep] = 0.0
        else:
            q = sets.find(y)
            left = resid[q] - rate[q] / 2.0 * (t * t - tref[q] ** 2)
            version[q] += 1
            new = sets.union(rep, q)
            top[new] = top[q]
            resid[new] = max(0.0, left)
            tref[new] = t
            rate[new] = rate[rep] + rate[q]
            version[new] = max(version[rep], version[q]) + 1
            push(new)

    diag = []
    if clusters and clusters[0].period < 1.0:
        diag.append(f"p_1 = {clusters[0].period:.6g} < 1")
    return ClusterPlan(n=n, root=tree.root, clusters=tuple(clusters), shares=shares,
                       cluster_of=cluster_of, pruned=pruned, diagnostics=tuple(diag))


def round_periods(plan: ClusterPlan) -> ClusterPlan:
    """Round p_i down to p_1 * 2^e_i with 2^e_i p_1 <= p_i < 2^(e_i+1) p_1."""
    if not plan.clusters:
        return replace(plan, exponents=())
    p1 = plan.clusters[0].period
    if not p1 > 0:
        raise InputError("first period must be positive")
    exps = [0]
    for c in plan.clusters[1:]:
        p = c.period
        if p < p1:
            raise InputError("periods must be non-decreasing")
        e = int(math.floor(math.log2(p / p1)))
        while p1 * 2.0 ** (e + 1) <= p:
            e += 1
        while e > 0 and p1 * 2.0 ** e > p:
            e -= 1
        exps.append(e)
    return replace(plan, exponents=tuple(exps))


def build_plan(instance: Instance) -> ClusterPlan:
    plan = round_periods(saturation_partition(instance))
    check_plan(plan, instance)
    return plan


def check_plan(plan: ClusterPlan, instance: Instance, rtol: float = SHARE_RTOL) -> None:
    """Raise ConstructionError if any ClusterPlan invariant fails."""
    for msg in plan_violations(plan, instance, rtol):
        raise ConstructionError(msg)


def plan_violations(plan: ClusterPlan, instance: Instance, rtol: float = SHARE_RTOL) -> list[str]:
    tree = instance.tree
    out = []
    act = active_vertices(instance)
    seen = np.zeros(tree.n, dtype=bool)
    roots_so_far = {tree.root}
    for i, c in enumerate(plan.clusters):
        mem = set(c.members)
        if c.root not in roots_so_far:
            out.append(f"cluster {i} hangs from {c.root}, which is not in an earlier cluster")
        for v in mem:
            if seen[v]:
                out.append(f"vertex {v} is in two clusters")
            seen[v] = True
            if int(tree.parent[v]) not in mem and int(tree.parent[v]) != c.root:
                out.append(f"cluster {i} is not a rooted subtree (vertex {v})")
        roots_so_far |= mem
        s = float(np.sum(plan.shares[list(mem)]))
        if not math.isclose(s, c.weight, rel_tol=rtol, abs_tol=0.0):
            out.append(f"cluster {i}: shares sum {s!r} != weight {c.weight!r}")
        exp = [instance.rates[v] / 2.0 * c.period ** 2 for v in mem]
        if not np.allclose(plan.shares[list(mem)], exp, rtol=rtol, atol=0.0):
            out.append(f"cluster {i}: shares differ from rate/2 * p^2")
    missing = np.flatnonzero(act & ~seen)
    if missing.size:
        out.append(f"vertices {missing[:5].tolist()} are not clustered")
    p = plan.periods
    if np.any(np.diff(p) < 0):
        out.append("periods are not non-decreasing")
    if plan.exponents is not None:
        ph = plan.rounded_periods
        if plan.exponents and plan.exponents[0] != 0:
            out.append("e_1 must be 0")
        for i in range(len(p)):
            if not (ph[i] <= p[i] and (p[i] < 2 * ph[i] or i == 0)):
                out.append(f"cluster {i}: rounded period {ph[i]!r} does not bracket {p[i]!r}")
    return out


def plan_schedule(sequence: RequestSequence, plan: ClusterPlan) -> Schedule:
    """Serve cluster i every p_hat_i and everything at the horizon.

    Ticks run on the grid k * p_hat_1; cluster i is due when 2^e_i divides k.
    All clusters due at a tick form one service (possibly with no requests).
    Blind weight per tick is the total weight of the due clusters.
    """
    if plan.exponents is None:
        raise InputError("plan must be rounded before scheduling")
    tau = sequence.horizon
    if plan.k == 0:
        if len(sequence):
            raise InputError("plan has no clusters but the sequence has requests")
        return Schedule([], [], blind_weights=[])
    p1 = plan.clusters[0].period
    K, exact = tick_count(tau, p1)
    n_serv = K if exact else K + 1
    ticks = p1 * np.arange(1, n_serv + 1, dtype=np.float64)
    ticks[-1] = tau
    last = n_serv - 1

    exps = np.asarray(plan.exponents, dtype=np.int64)
    wts = plan.weights
    kk = np.arange(1, n_serv + 1)
    blind = np.zeros(n_serv)
    for e, w in zip(exps.tolist(), wts.tolist()):
        due = (kk % (1 << e)) == 0
        due[last] = True
        blind[due] += w

    ci = plan.cluster_of[sequence.locations]
    if np.any(ci < 0):
        r = int(np.flatnonzero(ci < 0)[0])
        raise InputError(f"request {r} at vertex {int(sequence.locations[r])} lies outside every cluster")
    step = (1 << exps[ci]).astype(np.int64)
    t = sequence.times
    j = np.maximum(1, np.ceil(t / (p1 * step))).astype(np.int64)
    k = j * step
    in_grid = k <= n_serv
    k_safe = np.minimum(k, n_serv)
    early = in_grid & (ticks[k_safe - 1] < t)
    k = np.where(early, k + step, k)
    idx = np.minimum(k - 1, last)
    return Schedule(ticks, idx, blind_weights=blind)


def expected_blind_cost(plan: ClusterPlan, horizon: float) -> float:
    """Exact expected blind cost when the horizon is a multiple of every rounded period."""
    ph = plan.rounded_periods
    w = plan.weights
    lam = plan.rates
    return float(np.sum(horizon / ph * (w + 0.5 * lam * ph ** 2)))


def plan_upper_bound(plan: ClusterPlan, horizon: float) -> float:
    """2 * sum_i (horizon / p_hat_i) * w(T_i)."""
    return float(2.0 * np.sum(horizon / plan.rounded_periods * plan.weights))
