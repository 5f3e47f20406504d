"""Weighted rooted trees, stochastic instances, heaviness and light/heavy classification.

Vertices are dense integer ids ``0..n-1``.  The weight of a non-root vertex ``u``
is the weight of the edge joining ``u`` to its parent.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

# Relative slack for the w_u * lambda(u) >= 1 test.  Quantities like (1/x) * x
# land one ulp below 1.0 for some x.
HEAVY_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Tree:
    """Edge-weighted rooted tree stored as a parent array."""

    def __init__(self, parent: Sequence[int], weight: Sequence[float]):
        parent = np.asarray(parent, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        n = parent.shape[0]
        if n < 1 or weight.shape != (n,):
            raise InputError("parent and weight arrays must be non-empty and of equal length")
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise InputError(f"tree must have exactly one root, found {roots.size}")
        root = int(roots[0])
        if np.any(parent >= n):
            bad = int(np.flatnonzero(parent >= n)[0])
            raise InputError(f"vertex {bad} has unknown parent {int(parent[bad])}")
        weight = weight.copy()
        weight[root] = 0.0
        nonroot = parent >= 0
        if np.any(~np.isfinite(weight)) or np.any(weight[nonroot] <= 0):
            bad = int(np.flatnonzero(nonroot & ~(weight > 0))[0])
            raise InputError(f"edge weight of vertex {bad} must be positive, got {weight[bad]}")

        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            if v != root:
                children[int(parent[v])].append(v)
        order = []
        depth = np.zeros(n, dtype=np.int64)
        dist = np.zeros(n, dtype=np.float64)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for c in children[u]:
                depth[c] = depth[u] + 1
                dist[c] = dist[u] + weight[c]
                queue.append(c)
        if len(order) != n:
            raise InputError("parent array contains a cycle or a disconnected vertex")

        self.root = root
        self.parent = _frozen(parent.copy())
        self.weight = _frozen(weight)
        self.depth = _frozen(depth)
        self.dist = _frozen(dist)
        self.order = _frozen(np.asarray(order, dtype=np.int64))
        self._children = tuple(tuple(c) for c in children)

    @classmethod
    def from_edges(cls, n: int, root: int, edges: Iterable[Sequence]) -> "Tree":
        """Build from ``(child, parent, weight)`` triples."""
        parent = [-2] * n
        weight = [0.0] * n
        if not 0 <= root < n:
            raise InputError(f"root {root} out of range for {n} vertices")
        parent[root] = -1
        for child, par, w in edges:
            child, par = int(child), int(par)
            if not (0 <= child < n and 0 <= par < n):
                raise InputError(f"edge ({child}, {par}) references an unknown vertex")
            if child == root:
                raise InputError("the root cannot have a parent")
            if parent[child] != -2:
                raise InputError(f"vertex {child} has more than one parent")
            parent[child] = par
            weight[child] = float(w)
        missing = [v for v in range(n) if parent[v] == -2]
        if missing:
            raise InputError(f"vertices without a parent edge: {missing[:5]}")
        return cls(parent, weight)

    @property
    def n(self) -> int:
        return self.parent.shape[0]

    def children(self, u: int) -> tuple[int, ...]:
        return self._children[u]

    def edges(self) -> list[tuple[int, int, float]]:
        return [(v, int(self.parent[v]), float(self.weight[v])) for v in range(self.n) if v != self.root]

    def total_weight(self) -> float:
        return float(self.weight.sum())

    def check_vertex(self, u) -> int:
        try:
            iu = int(u)
        except (TypeError, ValueError):
            raise InputError(f"vertex id {u!r} is not an integer") from None
        if not 0 <= iu < self.n:
            raise InputError(f"unknown vertex id {u}")
        return iu

    def path_to_root(self, u: int) -> list[int]:
        """Vertices from ``u`` up to (excluding) the root."""
        path = []
        u = self.check_vertex(u)
        while u != self.root:
            path.append(u)
            u = int(self.parent[u])
        return path

    def is_ancestor(self, v: int, u: int) -> bool:
        """True if ``v`` lies on the path from ``u`` to the root (inclusive)."""
        while True:
            if u == v:
                return True
            if u == self.root:
                return False
            u = int(self.parent[u])

    def distance(self, u: int, v: int) -> float:
        """d(u, v); ``v`` must be an ancestor of ``u``."""
        u, v = self.check_vertex(u), self.check_vertex(v)
        if not self.is_ancestor(v, u):
            raise InputError(f"{v} is not an ancestor of {u}")
        return float(self.dist[u] - self.dist[v])

    def subtree(self, u: int) -> list[int]:
        """Vertices of the subtree rooted at ``u`` in BFS order."""
        u = self.check_vertex(u)
        out = [u]
        i = 0
        while i < len(out):
            out.extend(self._children[out[i]])
            i += 1
        return out

    def to_dict(self) -> dict:
        return {"vertices": self.n, "root": self.root, "edges": [[c, p, w] for c, p, w in self.edges()]}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tree)
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.weight, other.weight)
        )

    def __hash__(self):
        return hash((self.parent.tobytes(), self.weight.tobytes()))

    def __repr__(self) -> str:
        return f"Tree(n={self.n}, root={self.root}, total_weight={self.total_weight():.6g})"


class Instance:
    """A stochastic instance: a tree plus a Poisson arrival rate per vertex."""

    def __init__(self, tree: Tree, rates: Sequence[float]):
        rates = np.asarray(rates, dtype=np.float64).copy()
        if rates.shape != (tree.n,):
            raise InputError(f"expected {tree.n} rates, got shape {rates.shape}")
        if np.any(~np.isfinite(rates)) or np.any(rates < 0):
            raise InputError("arrival rates must be finite and non-negative")
        if rates[tree.root] != 0:
            raise InputError("the root must have arrival rate 0")
        if not np.any(rates > 0):
            raise InputError("at least one vertex must have a positive arrival rate")
        self.tree = tree
        self.rates = _frozen(rates)

    @property
    def total_rate(self) -> float:
        return float(self.rates.sum())

    def rate_of(self, vertices: Iterable[int]) -> float:
        return float(sum(self.rates[int(v)] for v in vertices))

    def subtree_rates(self) -> np.ndarray:
        """lambda(T_u) for every vertex u."""
        acc = self.rates.copy()
        for v in self.tree.order[::-1]:
            if v != self.tree.root:
                acc[self.tree.parent[v]] += acc[v]
        return acc

    def to_dict(self) -> dict:
        d = self.tree.to_dict()
        d["rates"] = {str(v): float(r) for v, r in enumerate(self.rates) if r > 0}
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        try:
            n = int(d["vertices"])
            tree = Tree.from_edges(n, int(d["root"]), d["edges"])
            rates = np.zeros(n)
            for key, val in d.get("rates", {}).items():
                rates[tree.check_vertex(key)] = float(val)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed instance document: {exc}") from None
        return cls(tree, rates)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"instance file is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and self.tree == other.tree and np.array_equal(self.rates, other.rates)

    def __repr__(self) -> str:
        return f"Instance(n={self.tree.n}, total_rate={self.total_rate:.6g})"


class Classification(str, enum.Enum):
    LIGHT = "light"
    HEAVY = "heavy"
    NEITHER = "neither"


def minimal_subtree_weight(tree: Tree, locations: Iterable[int]) -> float:
    """Weight of the smallest subtree containing the root and every location."""
    seen = set()
    total = 0.0
    for u in locations:
        u = tree.check_vertex(u)
        while u != tree.root and u not in seen:
            seen.add(u)
            total += tree.weight[u]
            u = int(tree.parent[u])
    return float(total)


def connected_root(tree: Tree, vertices: Iterable[int]) -> int:
    """gamma(U): the unique vertex of U whose parent is outside U.

    Raises InputError if U is empty or T[U] is not connected.
    """
    U = {tree.check_vertex(v) for v in vertices}
    if not U:
        raise InputError("vertex set is empty")
    tops = [u for u in U if u == tree.root or int(tree.parent[u]) not in U]
    if len(tops) != 1:
        raise InputError(f"vertex set is not connected ({len(tops)} components)")
    return tops[0]


def heaviness(instance: Instance, subtree_root: int | None = None) -> float:
    """pi over the subtree rooted at ``subtree_root`` (default: the whole tree)."""
    tree = instance.tree
    top = tree.root if subtree_root is None else tree.check_vertex(subtree_root)
    verts = tree.subtree(top)
    return float(sum(instance.rates[v] * (tree.dist[v] - tree.dist[top]) for v in verts))


def heaviness_of_set(instance: Instance, vertices: Iterable[int]) -> float:
    """pi(U) for a connected vertex set, distances measured to gamma(U)."""
    verts = list(vertices)
    top = connected_root(instance.tree, verts)
    d = instance.tree.dist
    return float(sum(instance.rates[v] * (d[v] - d[top]) for v in set(verts)))


def is_light(instance: Instance) -> bool:
    return heaviness(instance) <= 1.0


def is_heavy(instance: Instance) -> bool:
    w, lam = instance.tree.weight, instance.rates
    pos = lam > 0
    return bool(np.all(w[pos] * lam[pos] >= 1.0 - HEAVY_RTOL))


def classify(instance: Instance) -> Classification:
    """Light iff pi <= 1; heavy iff w_u * lambda(u) >= 1 wherever lambda(u) > 0.

    Both can hold only on the boundary (pi == 1 with every loaded edge exactly
    saturated); that case reports HEAVY.
    """
    heavy = is_heavy(instance)
    if heavy:
        return Classification.HEAVY
    if is_light(instance):
        return Classification.LIGHT
    return Classification.NEITHER


def single_edge(w: float, lam: float) -> Instance:
    """Root 0, leaf 1, edge weight ``w``, leaf rate ``lam``."""
    if not (w > 0 and lam > 0 and math.isfinite(w) and math.isfinite(lam)):
        raise InputError("single-edge instance needs w > 0 and lambda > 0")
    return Instance(Tree([-1, 0], [0.0, w]), [0.0, lam])
