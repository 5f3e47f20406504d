"""Independent reference implementations used only by the tests."""

import math

import numpy as np


def greedy_stepping(times, locs, tree, dt=1e-4, t_max=None):
    """Time-stepping greedy: serve the pending set when its delay reaches its subtree weight.

    Returns the list of service times.  Arrivals landing in a step join after
    the trigger check, so a trigger coinciding with an arrival fires first.
    """
    times = list(times)
    i, t, pending, out = 0, 0.0, [], []
    t_max = t_max if t_max is not None else (max(times) if times else 0.0) + 100.0
    while t <= t_max and (i < len(times) or pending):
        while i < len(times) and times[i] <= t + 1e-15:
            pending.append(i)
            i += 1
        if pending:
            delay = sum(t - times[r] for r in pending)
            marked = set()
            for r in pending:
                u = int(locs[r])
                while u != tree.root and u not in marked:
                    marked.add(u)
                    u = int(tree.parent[u])
            if delay >= sum(tree.weight[u] for u in marked):
                out.append(t)
                pending = []
        t += dt
    return out


def saturation_times(instance):
    """Per-vertex cluster period from an edge-by-edge event simulation.

    Every active vertex pays at pace lambda(v) t into the lowest unsaturated edge
    on its root path; a vertex freezes once every edge between it and a frozen
    vertex (or the root) is saturated.  Simultaneous events are applied
    together.
    """
    tree = instance.tree
    lam = instance.rates
    n = tree.n
    sub = instance.subtree_rates()
    active = [v != tree.root and sub[v] > 0 for v in range(n)]
    resid = tree.weight.astype(float).copy()
    saturated = [False] * n
    frozen = [False] * n
    frozen[tree.root] = True
    period = np.full(n, np.nan)
    t0 = 0.0

    def target(v):
        u = v
        while u != tree.root and saturated[u]:
            u = int(tree.parent[u])
        return u

    while any(active[v] and not frozen[v] for v in range(n)):
        pay = np.zeros(n)
        for v in range(n):
            if active[v] and not frozen[v]:
                e = target(v)
                if e != tree.root:
                    pay[e] += lam[v]
        cand = [(math.sqrt(t0 * t0 + 2 * resid[e] / pay[e]), e) for e in range(n) if pay[e] > 0]
        t1 = min(c[0] for c in cand)
        for e in range(n):
            if pay[e] > 0:
                resid[e] -= pay[e] / 2 * (t1 * t1 - t0 * t0)
        for t, e in cand:
            if t <= t1 * (1 + 1e-12):
                saturated[e] = True
                resid[e] = 0.0
        t0 = t1
        changed = True
        while changed:
            changed = False
            for v in range(n):
                if active[v] and not frozen[v] and saturated[v] and frozen[int(tree.parent[v])]:
                    frozen[v] = True
                    period[v] = t1
                    changed = True
    return period


def saturation_stepping(instance, dt=1e-5):
    """Crude fixed-step version of the same process (for tiny examples only)."""
    tree = instance.tree
    lam = instance.rates
    n = tree.n
    resid = tree.weight.astype(float).copy()
    sat = [False] * n
    frozen = [False] * n
    frozen[tree.root] = True
    period = np.full(n, np.nan)
    t = 0.0
    live = [v for v in range(n) if v != tree.root]
    while not all(frozen[v] for v in live):
        t += dt
        for v in live:
            if frozen[v]:
                continue
            u = v
            while u != tree.root and sat[u]:
                u = int(tree.parent[u])
            if u != tree.root:
                resid[u] -= lam[v] * t * dt
        for u in live:
            if resid[u] <= 0:
                sat[u] = True
        changed = True
        while changed:
            changed = False
            for v in live:
                if not frozen[v] and sat[v] and frozen[int(tree.parent[v])]:
                    frozen[v], period[v], changed = True, t, True
    return period
