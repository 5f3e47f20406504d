"""GEN: balanced partition, augmented heavy instance, heavy sequence, and the combined scheduler."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, InputError
from .plan import ClusterPlan, build_plan, plan_schedule
from .schedule import RequestSequence, Schedule
from .tree import Instance, Tree, classify, Classification


class PartType(str, enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"


@dataclass(frozen=True)
class Part:
    vertices: tuple[int, ...]
    top: int
    kind: PartType
    pi: float
    rate: float
    is_root: bool

    @property
    def pi_prime(self) -> float:
        if self.kind is PartType.TYPE_I and not self.is_root:
            return 1.0
        return self.pi


@dataclass(frozen=True)
class BalancedPartition:
    """Parts in closing order; ``part_of[v]`` is the index of v's part."""

    parts: tuple[Part, ...]
    part_of: np.ndarray

    @property
    def root_part(self) -> Part:
        return next(p for p in self.parts if p.is_root)

    @property
    def nonroot_parts(self) -> list[Part]:
        return [p for p in self.parts if not p.is_root]

    def pi_prime_total(self) -> float:
        return float(sum(p.pi_prime for p in self.parts))

    def to_dict(self) -> dict:
        return {
            "parts": [
                {"vertices": list(p.vertices), "top": p.top, "type": p.kind.value, "pi": p.pi,
                 "pi_prime": p.pi_prime, "rate": p.rate, "root_part": p.is_root}
                for p in self.parts
            ]
        }


def _require_single_child(tree: Tree):
    if len(tree.children(tree.root)) != 1:
        raise InputError(
            f"root has {len(tree.children(tree.root))} children; split the instance per root branch first"
        )


def balanced_partition(instance: Instance) -> BalancedPartition:
    """Sweep vertices by decreasing depth, growing sets upward until they turn heavy.

    The set U grown at u absorbs the still-open sets of u's children.  It is
    closed as a part when u is the root or when adding the parent edge pushes
    its heaviness strictly above 1.
    """
    tree = instance.tree
    _require_single_child(tree)
    lam = instance.rates
    n = tree.n
    order = sorted(range(n), key=lambda v: (-tree.dist[v], v))
    open_set: dict[int, list[int]] = {}
    open_pi = np.zeros(n)
    open_rate = np.zeros(n)
    parts: list[Part] = []
    part_of = np.full(n, -1, dtype=np.int64)
    for u in order:
        verts = [u]
        pi = 0.0
        rate = float(lam[u])
        for c in tree.children(u):
            if c in open_set:
                verts.extend(open_set.pop(c))
                pi += open_pi[c] + open_rate[c] * tree.weight[c]
                rate += open_rate[c]
        is_root = u == tree.root
        if is_root or pi + rate * tree.weight[u] > 1.0:
            kind = PartType.TYPE_I if pi <= 1.0 else PartType.TYPE_II
            idx = len(parts)
            parts.append(Part(tuple(sorted(verts)), u, kind, float(pi), float(rate), is_root))
            part_of[verts] = idx
        else:
            open_set[u] = verts
            open_pi[u] = pi
            open_rate[u] = rate
    return BalancedPartition(tuple(parts), part_of)


def _pi_direct(tree: Tree, lam: np.ndarray, verts, top: int) -> float:
    return float(sum(lam[v] * (tree.dist[v] - tree.dist[top]) for v in verts))


def partition_violations(instance: Instance, partition: BalancedPartition) -> list[str]:
    """Independent check of the balance conditions; empty list means valid.

    Child branches of a type-II part must have heaviness at most 1 (the sweep
    keeps growing a set whose heaviness with its parent edge is exactly 1).
    """
    tree = instance.tree
    lam = instance.rates
    out = []
    count = np.zeros(tree.n, dtype=np.int64)
    for i, p in enumerate(partition.parts):
        U = set(p.vertices)
        for v in U:
            count[v] += 1
        tops = [u for u in U if u == tree.root or int(tree.parent[u]) not in U]
        if len(tops) != 1:
            out.append(f"part {i} is not connected")
            continue
        g = tops[0]
        if g != p.top:
            out.append(f"part {i}: recorded top {p.top} differs from {g}")
        pi = _pi_direct(tree, lam, U, g)
        if p.is_root != (g == tree.root):
            out.append(f"part {i}: root flag is wrong")
        if pi <= 1.0:
            if g != tree.root:
                # heaviness of U plus its parent, measured at the parent
                if not pi + float(sum(lam[v] for v in U)) * tree.weight[g] > 1.0:
                    out.append(f"part {i}: light part could absorb its parent")
            if p.kind is not PartType.TYPE_I:
                out.append(f"part {i}: labelled {p.kind.value} but heaviness {pi:.6g} <= 1")
        else:
            if p.kind is not PartType.TYPE_II:
                out.append(f"part {i}: labelled {p.kind.value} but heaviness {pi:.6g} > 1")
            for y in tree.children(g):
                if y not in U:
                    continue
                branch = [v for v in tree.subtree(y) if v in U]
                if _pi_direct(tree, lam, branch, g) > 1.0:
                    out.append(f"part {i}: branch through child {y} is heavy")
        if p.is_root and p.kind is not PartType.TYPE_I:
            out.append("root part must be type-I")
    bad = np.flatnonzero(count != 1)
    if bad.size:
        out.append(f"vertices {bad[:5].tolist()} are not covered exactly once")
    return out


def check_partition(instance: Instance, partition: BalancedPartition) -> bool:
    return not partition_violations(instance, partition)


@dataclass(frozen=True)
class AugmentedInstance:
    """Augmented tree with pendant vertices z_U; only z_U carry rate.

    ``z_of_part[i]`` / ``splitter_of_part[i]`` are -1 for the root part.
    """

    instance: Instance
    n_original: int
    z_of_part: tuple[int, ...]
    splitter_of_part: tuple[int, ...]
    part_of_z: dict = field(default_factory=dict)

    @property
    def tree(self) -> Tree:
        return self.instance.tree

    def to_dict(self) -> dict:
        d = self.instance.to_dict()
        d["original_vertices"] = self.n_original
        d["z"] = {str(z): i for i, z in enumerate(self.z_of_part) if z >= 0}
        d["splitters"] = {str(s): i for i, s in enumerate(self.splitter_of_part) if s >= 0}
        return d


def build_heavy_instance(instance: Instance, partition: BalancedPartition) -> AugmentedInstance:
    tree = instance.tree
    n = tree.n
    parent = tree.parent.tolist()
    weight = tree.weight.tolist()
    rates = [0.0] * n
    z_of, sp_of = [], []
    for i, p in enumerate(partition.parts):
        if p.is_root:
            z_of.append(-1)
            sp_of.append(-1)
            continue
        if not p.rate > 0:
            raise ConstructionError(f"part {i} (top {p.top}) has zero arrival rate")
        g = p.top
        if p.kind is PartType.TYPE_I:
            lower = (1.0 - p.pi) / p.rate
            upper = tree.weight[g] - lower
            if not upper > 0:
                raise ConstructionError(f"part {i}: upper splitter edge {upper!r} is not positive")
            if lower > 0:
                zp = len(parent)
                parent.append(parent[g])
                weight.append(upper)
                rates.append(0.0)
                parent[g] = zp
                weight[g] = lower
            else:
                # heaviness exactly 1: the lower edge has length 0, so the splitter is the top itself
                zp = g
            pend = 1.0 / p.rate
        else:
            zp = g
            pend = p.pi / p.rate
        z = len(parent)
        parent.append(zp)
        weight.append(pend)
        rates.append(p.rate)
        z_of.append(z)
        sp_of.append(zp)
    aug = Instance(Tree(parent, weight), rates)
    return AugmentedInstance(aug, n, tuple(z_of), tuple(sp_of),
                             {z: i for i, z in enumerate(z_of) if z >= 0})


def augmented_violations(instance: Instance, partition: BalancedPartition, aug: AugmentedInstance) -> list[str]:
    out = []
    if aug.instance.rates.sum() > 0 and classify(aug.instance) is not Classification.HEAVY:
        out.append("augmented instance is not heavy")
    t2 = aug.tree
    for i, p in enumerate(partition.parts):
        if p.is_root:
            continue
        z, zp = aug.z_of_part[i], aug.splitter_of_part[i]
        prod = aug.instance.rates[z] * t2.weight[z]
        if p.kind is PartType.TYPE_I:
            w0 = instance.tree.weight[p.top]
            total = t2.weight[p.top] + (t2.weight[zp] if zp != p.top else 0.0)
            if abs(total - w0) > math.ulp(w0):
                out.append(f"part {i}: splitter edges sum to {total!r}, expected {w0!r}")
            if abs(prod - 1.0) > 4 * math.ulp(1.0):
                out.append(f"part {i}: rate * pendant weight = {prod!r}, expected 1")
        else:
            if zp != p.top:
                out.append(f"part {i}: type-II pendant must hang from the part top")
            if not math.isclose(prod, p.pi, rel_tol=1e-12):
                out.append(f"part {i}: rate * pendant weight = {prod!r}, expected {p.pi!r}")
    return out


def heavy_sequence(sequence: RequestSequence, partition: BalancedPartition, aug: AugmentedInstance) -> RequestSequence:
    """Map each request in a non-root part U to (t, z_U); root-part requests are dropped."""
    z = np.asarray(aug.z_of_part, dtype=np.int64)
    zl = z[partition.part_of[sequence.locations]]
    keep = zl >= 0
    return RequestSequence(sequence.times[keep], zl[keep], sequence.horizon)


def split_root(instance: Instance) -> list[tuple[Instance, np.ndarray]]:
    """One single-child instance per root branch with positive rate.

    Returns pairs (branch instance, sub_to_orig) where sub vertex 0 is the root.
    """
    tree = instance.tree
    out = []
    for c in tree.children(tree.root):
        verts = tree.subtree(c)
        if not any(instance.rates[v] > 0 for v in verts):
            continue
        sub_to_orig = np.array([tree.root] + verts, dtype=np.int64)
        idx = {v: i for i, v in enumerate(sub_to_orig.tolist())}
        parent = [-1] + [idx[int(tree.parent[v])] for v in verts]
        weight = [0.0] + [float(tree.weight[v]) for v in verts]
        rates = [0.0] + [float(instance.rates[v]) for v in verts]
        out.append((Instance(Tree(parent, weight), rates), sub_to_orig))
    return out


@dataclass(frozen=True)
class Branch:
    instance: Instance
    sub_to_orig: np.ndarray
    partition: BalancedPartition
    augmented: AugmentedInstance | None
    plan: ClusterPlan | None


class GenScheduler:
    """Preprocessed GEN for one instance; ``schedule`` is then a pure function of the sequence."""

    def __init__(self, instance: Instance):
        self.instance = instance
        n = instance.tree.n
        self.branches: list[Branch] = []
        self.branch_of = np.full(n, -1, dtype=np.int64)
        self.local_id = np.full(n, -1, dtype=np.int64)
        for b, (sub, s2o) in enumerate(split_root(instance)):
            part = balanced_partition(sub)
            aug = plan = None
            if len(part.parts) > 1:
                aug = build_heavy_instance(sub, part)
                plan = build_plan(aug.instance)
            self.branches.append(Branch(sub, s2o, part, aug, plan))
            self.branch_of[s2o[1:]] = b
            self.local_id[s2o[1:]] = np.arange(1, s2o.size)

    def pi_prime_total(self) -> float:
        return float(sum(b.partition.pi_prime_total() for b in self.branches))

    def schedule(self, sequence: RequestSequence) -> Schedule:
        """Root-part requests are served on arrival; the rest at their part's PLAN tick."""
        m = len(sequence)
        serve_at = sequence.times.copy()
        key = np.full(m, -1, dtype=np.int64)  # -1: instant; otherwise global tick id
        br = self.branch_of[sequence.locations]
        if m and np.any(br < 0):
            r = int(np.flatnonzero(br < 0)[0])
            raise InputError(f"request {r} lies in a zero-rate branch")
        offset = 0
        for b, branch in enumerate(self.branches):
            sel = np.flatnonzero(br == b)
            if branch.plan is None:
                continue
            local = RequestSequence(sequence.times[sel], self.local_id[sequence.locations[sel]], sequence.horizon)
            hs_mask = branch.partition.part_of[local.locations]
            z = np.asarray(branch.augmented.z_of_part, dtype=np.int64)[hs_mask]
            heavy = z >= 0
            hseq = RequestSequence(local.times[heavy], z[heavy], sequence.horizon)
            ps = plan_schedule(hseq, branch.plan)
            rows = sel[heavy]
            serve_at[rows] = ps.times[ps.assignment]
            key[rows] = offset + ps.assignment
            offset += ps.n_services
        # instant requests each get their own service; PLAN requests share per tick
        inst = np.flatnonzero(key < 0)
        key[inst] = offset + np.arange(inst.size)
        uniq, assignment = np.unique(key, return_inverse=True)
        times = np.empty(uniq.size)
        times[assignment] = serve_at
        order = np.argsort(times, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return Schedule(times[order], rank[assignment])

    def to_dict(self) -> dict:
        out = []
        for b in self.branches:
            d = {"vertices": b.sub_to_orig.tolist(), "partition": b.partition.to_dict()}
            if b.augmented is not None:
                d["augmented"] = b.augmented.to_dict()
                d["plan"] = b.plan.to_dict()
            out.append(d)
        return {"branches": out, "pi_prime_total": self.pi_prime_total()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def gen_schedule(sequence: RequestSequence, instance: Instance) -> Schedule:
    return GenScheduler(instance).schedule(sequence)


def gen_plan_upper_bound(gen: GenScheduler, horizon: float) -> float:
    """Expected-cost bound: 2 sum (tau/p_hat) w over every branch plan, plus tau * sum pi'."""
    from .plan import plan_upper_bound

    total = horizon * gen.pi_prime_total()
    for b in gen.branches:
        if b.plan is not None:
            total += plan_upper_bound(b.plan, horizon)
    return float(total)
