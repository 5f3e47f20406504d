"""Rate-oblivious schedulers: instant service, fixed-period service and the greedy rule."""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .schedule import RequestSequence, Schedule
from .tree import Tree

# tau counts as a multiple of a period when tau/p is this close to an integer
MULTIPLE_RTOL = 1e-9


def instant(sequence: RequestSequence, tree: Tree | None = None) -> Schedule:
    """Serve every request alone at its arrival time."""
    m = len(sequence)
    return Schedule(sequence.times.copy(), np.arange(m, dtype=np.int64))


def tick_count(horizon: float, period: float) -> tuple[int, bool]:
    """Number of full periods in ``[0, horizon]`` and whether horizon is (numerically) a multiple."""
    if not (period > 0 and math.isfinite(period)):
        raise InputError(f"period must be positive and finite, got {period}")
    q = horizon / period
    k = round(q)
    if k >= 1 and abs(q - k) <= MULTIPLE_RTOL * max(1.0, q):
        return int(k), True
    return int(math.floor(q)), False


def grid_times(horizon: float, period: float) -> np.ndarray:
    """Service instants ``p, 2p, ...`` up to ``horizon``, ending exactly at ``horizon``."""
    k, exact = tick_count(horizon, period)
    ticks = period * np.arange(1, k + 1, dtype=np.float64)
    if exact:
        ticks[-1] = horizon
        return ticks
    return np.append(ticks, horizon)


def assign_to_grid(times: np.ndarray, ticks: np.ndarray) -> np.ndarray:
    """Index of the first tick at or after each arrival (ticks sorted, last tick >= all times)."""
    idx = np.searchsorted(ticks, times, side="left")
    if idx.size and idx.max() >= ticks.size:
        raise InputError("arrival after the last service tick")
    return idx.astype(np.int64)


def fixed_period(sequence: RequestSequence, tree: Tree, period: float) -> Schedule:
    """Serve all pending requests at ``p, 2p, ...`` and at the horizon.

    Every tick is a service, including empty ones; the blind weight charges the
    whole tree at each tick.
    """
    if not (period > 0 and math.isfinite(period)):
        raise InputError(f"period must be positive, got {period}")
    ticks = grid_times(sequence.horizon, float(period))
    assignment = assign_to_grid(sequence.times, ticks)
    blind = np.full(ticks.size, tree.total_weight())
    return Schedule(ticks, assignment, blind_weights=blind)


def greedy(sequence: RequestSequence, tree: Tree) -> Schedule:
    """Serve the pending set once its accumulated delay equals its subtree weight.

    Between arrivals the pending delay grows linearly with slope |R|, so the
    trigger time is solved exactly.  A trigger that coincides with an arrival
    fires before the arrival joins the pending set.  The last service may fall
    after the horizon.
    """
    parent = tree.parent.tolist()
    weight = tree.weight.tolist()
    root = tree.root
    times = sequence.times.tolist()
    locs = sequence.locations.tolist()
    m = len(times)
    assignment = np.empty(m, dtype=np.int64)
    services: list[float] = []
    pending: list[int] = []
    marked: set[int] = set()
    W = 0.0
    D = 0.0
    t_cur = 0.0

    def fire(at):
        nonlocal W, D
        s = len(services)
        services.append(at)
        for r in pending:
            assignment[r] = s
        pending.clear()
        marked.clear()
        W = 0.0
        D = 0.0

    for i in range(m):
        t = times[i]
        if pending:
            k = len(pending)
            t_star = t_cur + (W - D) / k
            if t_star <= t:
                fire(t_star)
            else:
                D += k * (t - t_cur)
        t_cur = t
        pending.append(i)
        u = locs[i]
        while u != root and u not in marked:
            marked.add(u)
            W += weight[u]
            u = parent[u]
    if pending:
        fire(t_cur + (W - D) / len(pending))
    return Schedule(np.asarray(services, dtype=np.float64), assignment)


def parse_scheduler(name: str):
    """``instant``, ``greedy`` or ``periodic:<p>`` to a callable (sequence, tree) -> Schedule."""
    if name == "instant":
        return instant
    if name == "greedy":
        return greedy
    if name.startswith("periodic:"):
        try:
            p = float(name.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad period in {name!r}") from None
        if not (p > 0 and math.isfinite(p)):
            raise InputError(f"period must be positive in {name!r}")
        return lambda seq, tree: fixed_period(seq, tree, p)
    raise InputError(f"unknown scheduler {name!r}")
