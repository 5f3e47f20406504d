"""Instance generators: single edge, the star separating INSTANT/PLAN from a hand-made
algorithm, and random trees (general, light, heavy)."""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .tree import Classification, Instance, Tree, classify, heaviness, single_edge

KINDS = ("SingleEdge", "AppendixBStar", "RandomTree", "LightRandom", "HeavyRandom")


def star_instance(n: int) -> Instance:
    """Root - u (weight sqrt n) - n leaves (weight 1), each leaf with rate 1/n."""
    if n < 1:
        raise InputError("star needs n >= 1")
    parent = [-1, 0] + [1] * n
    weight = [0.0, math.sqrt(n)] + [1.0] * n
    rates = [0.0, 0.0] + [1.0 / n] * n
    return Instance(Tree(parent, weight), rates)


def _rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def random_tree(rng, n: int, max_depth: int = 4, weight_range=(0.5, 3.0), rate_range=(0.1, 1.0),
                zero_rate_prob: float = 0.2) -> Instance:
    if n < 2:
        raise InputError("random tree needs n >= 2")
    if max_depth < 1:
        raise InputError("max_depth must be >= 1")
    lo, hi = map(float, weight_range)
    rlo, rhi = map(float, rate_range)
    if not (0 < lo <= hi and 0 < rlo <= rhi):
        raise InputError("weight and rate ranges must be positive and ordered")
    parent = [-1]
    depth = [0]
    for v in range(1, n):
        cand = [u for u in range(v) if depth[u] < max_depth]
        p = int(cand[rng.integers(len(cand))])
        parent.append(p)
        depth.append(depth[p] + 1)
    weight = [0.0] + rng.uniform(lo, hi, n - 1).tolist()
    rates = [0.0] + rng.uniform(rlo, rhi, n - 1).tolist()
    zero = rng.random(n - 1) < zero_rate_prob
    for i in np.flatnonzero(zero).tolist():
        rates[i + 1] = 0.0
    if not any(r > 0 for r in rates):
        rates[int(rng.integers(1, n))] = float(rng.uniform(rlo, rhi))
    return Instance(Tree(parent, weight), rates)


def light_random(rng, n: int, target_pi: float | None = None, **kw) -> Instance:
    """Random tree with rates scaled so that the heaviness equals ``target_pi`` (default U(0.2, 1))."""
    base = random_tree(rng, n, **kw)
    target = float(rng.uniform(0.2, 1.0)) if target_pi is None else float(target_pi)
    if not 0 < target <= 1:
        raise InputError("target_pi must lie in (0, 1]")
    scale = target / heaviness(base)
    inst = Instance(base.tree, base.rates * scale)
    if heaviness(inst) > 1.0:
        inst = Instance(base.tree, base.rates * scale * (1 - 1e-12))
    return inst


def heavy_random(rng, n: int, max_positive: int = 3, slack=(1.0, 1.6), max_load: float | None = None,
                 attempts: int = 1000, **kw) -> Instance:
    """Random tree whose loaded edges satisfy w_u * lambda(u) >= 1.

    At most ``max_positive`` vertices carry rate.  With ``max_load`` the draw is
    repeated until lambda(T) * 2 * (largest rounded PLAN period) <= max_load.
    """
    from .plan import build_plan

    for _ in range(attempts):
        base = random_tree(rng, n, zero_rate_prob=0.0, **kw)
        rates = base.rates.copy()
        pos = np.flatnonzero(rates > 0)
        k = int(rng.integers(1, min(max_positive, pos.size) + 1))
        keep = rng.choice(pos, size=k, replace=False)
        mask = np.zeros(n, dtype=bool)
        mask[keep] = True
        rates[~mask] = 0.0
        weight = base.tree.weight.copy()
        for v in keep.tolist():
            need = 1.0 / rates[v] * float(rng.uniform(*slack))
            weight[v] = max(weight[v], need)
        inst = Instance(Tree(base.tree.parent, weight), rates)
        if classify(inst) is not Classification.HEAVY:
            continue
        if max_load is None:
            return inst
        plan = build_plan(inst)
        if inst.total_rate * 2.0 * float(plan.rounded_periods.max()) <= max_load:
            return inst
    raise InputError(f"no heavy instance satisfied max_load={max_load} in {attempts} draws")


def generate_instance(kind: str, params: dict | None = None, seed: int = 0) -> Instance:
    """Build an instance by generator name; deterministic for a fixed seed."""
    params = dict(params or {})
    try:
        if kind == "SingleEdge":
            return single_edge(float(params.get("w", 1.0)), float(params.get("lam", params.get("lambda", 1.0))))
        if kind == "AppendixBStar":
            return star_instance(int(params.get("n", 16)))
        rng = _rng(seed)
        n = int(params.pop("n", 6))
        for key in ("weight_range", "rate_range", "slack"):
            if key in params and isinstance(params[key], str):
                params[key] = tuple(float(x) for x in params[key].split(","))
        for key in ("max_depth", "max_positive", "attempts"):
            if key in params:
                params[key] = int(params[key])
        for key in ("zero_rate_prob", "target_pi", "max_load"):
            if key in params and params[key] is not None:
                params[key] = float(params[key])
        if kind == "RandomTree":
            return random_tree(rng, n, **params)
        if kind == "LightRandom":
            return light_random(rng, n, **params)
        if kind == "HeavyRandom":
            return heavy_random(rng, n, **params)
    except TypeError as exc:
        raise InputError(f"bad parameters for {kind}: {exc}") from None
    raise InputError(f"unknown instance kind {kind!r}; choose from {', '.join(KINDS)}")
