"""Tree topologies over terminals and Steiner points.

Vertex ids ``0 .. n-1`` are terminals, ``n .. n+s-1`` Steiner points.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..errors import NotATree, ResourceLimit, UnbalancedMass
from ..measures import AtomicMeasure

MAX_TERMINALS = 8
MAX_STEINER = 3
BALANCE_TOL = 1e-9
DEGENERATE_TOL = 1e-12

Point = tuple[float, ...]
Edge = tuple[int, int]


@dataclass(frozen=True)
class Topology:
    """Tree over signed terminals plus ``steiner_count`` free vertices.

    ``tree_edges`` holds sorted ``(low, high)`` pairs in sorted order, so
    two equal topologies compare equal.
    """

    terminals: tuple[tuple[Point, float], ...]
    steiner_count: int
    tree_edges: tuple[Edge, ...]

    def __post_init__(self):
        edges = tuple(sorted((min(a, b), max(a, b)) for a, b in self.tree_edges))
        object.__setattr__(self, "tree_edges", edges)

    @property
    def n_terminals(self) -> int:
        return len(self.terminals)

    @property
    def n_vertices(self) -> int:
        return len(self.terminals) + self.steiner_count

    @property
    def dim(self) -> int:
        return len(self.terminals[0][0]) if self.terminals else 0

    @property
    def key(self) -> tuple:
        """Canonical id used for ordering and tie-breaking."""
        return (self.steiner_count, self.tree_edges)

    def terminal_points(self) -> np.ndarray:
        return np.array([p for p, _ in self.terminals], dtype=float).reshape(len(self.terminals), -1)

    def masses(self) -> np.ndarray:
        m = np.zeros(self.n_vertices)
        m[: self.n_terminals] = [x for _, x in self.terminals]
        return m

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for a, b in self.tree_edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def canonical(self) -> "Topology":
        """Relabel Steiner points so that equivalent topologies coincide."""
        return Topology(self.terminals, self.steiner_count, canonical_edges(self.n_terminals, self.steiner_count, self.tree_edges))


def canonical_edges(n: int, s: int, edges: Sequence[Edge]) -> tuple[Edge, ...]:
    best = None
    for perm in itertools.permutations(range(n, n + s)):
        relabel = lambda x: x if x < n else perm[x - n]  # noqa: E731
        cand = tuple(sorted((min(relabel(a), relabel(b)), max(relabel(a), relabel(b))) for a, b in edges))
        if best is None or cand < best:
            best = cand
    return best if best is not None else ()


def terminals_from_measures(mu: AtomicMeasure, nu: AtomicMeasure) -> tuple[tuple[Point, float], ...]:
    """Signed terminals ``mu - nu`` sorted by coordinates; zero nets dropped."""
    net: dict[Point, list[float]] = {}
    for p, m in mu:
        net.setdefault(p, []).append(m)
    for p, m in nu:
        net.setdefault(p, []).append(-m)
    out = []
    for p in sorted(net):
        x = math.fsum(net[p])
        if x != 0.0:
            out.append((p, x))
    return tuple(out)


@dataclass(frozen=True)
class TreeWeights:
    """Kirchhoff weights on a tree, aligned with ``Topology.tree_edges``.

    ``oriented[i]`` is ``tree_edges[i]`` directed from the side with
    surplus towards the side with deficit.
    """

    oriented: tuple[Edge, ...]
    weights: np.ndarray
    degenerate: np.ndarray


def _check_tree(n_vertices: int, edges: Sequence[Edge]) -> list[list[int]]:
    if len(edges) != max(n_vertices - 1, 0):
        raise NotATree(f"{len(edges)} edges for {n_vertices} vertices")
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for a, b in edges:
        if not (0 <= a < n_vertices and 0 <= b < n_vertices) or a == b:
            raise NotATree(f"bad edge {(a, b)}")
        adj[a].append(b)
        adj[b].append(a)
    seen = {0} if n_vertices else set()
    todo = [0] if n_vertices else []
    while todo:
        u = todo.pop()
        for x in adj[u]:
            if x not in seen:
                seen.add(x)
                todo.append(x)
    if len(seen) != n_vertices:
        raise NotATree("edge set is not connected")
    return adj


def tree_weights(t: Topology) -> TreeWeights:
    """Unique Kirchhoff weights of a tree with fixed terminal masses.

    The weight of an edge is the absolute net mass on either side of it.
    Raises NotATree or UnbalancedMass.
    """
    masses = t.masses()
    if abs(math.fsum(masses)) > BALANCE_TOL:
        raise UnbalancedMass(f"signed terminal masses sum to {math.fsum(masses)!r}")
    adj = _check_tree(t.n_vertices, t.tree_edges)

    parent = [-1] * t.n_vertices
    order = []
    todo = [0]
    seen = {0}
    while todo:
        u = todo.pop()
        order.append(u)
        for x in adj[u]:
            if x not in seen:
                seen.add(x)
                parent[x] = u
                todo.append(x)
    below: list[list[float]] = [[m] for m in masses]
    subtree = np.zeros(t.n_vertices)
    for u in reversed(order):
        subtree[u] = math.fsum(below[u])
        if parent[u] >= 0:
            below[parent[u]].append(subtree[u])

    oriented = []
    weights = np.zeros(len(t.tree_edges))
    for i, (a, b) in enumerate(t.tree_edges):
        child, par = (a, b) if parent[a] == b else (b, a)
        surplus = subtree[child]
        weights[i] = abs(surplus)
        oriented.append((child, par) if surplus > 0 else (par, child))
    return TreeWeights(tuple(oriented), weights, weights <= DEGENERATE_TOL)


def _prufer_to_edges(seq: Sequence[int], n_vertices: int) -> list[Edge]:
    degree = [1] * n_vertices
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(n_vertices) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return edges


def _sequences(n: int, s: int) -> Iterator[tuple[int, ...]]:
    """Pruefer sequences over ``n + s`` labels where every Steiner label
    occurs at least twice (Steiner degree >= 3)."""
    length = n + s - 2
    labels = range(n + s)

    def rec(prefix: list[int], counts: list[int]):
        remaining = length - len(prefix)
        missing = sum(max(0, 2 - c) for c in counts)
        if missing > remaining:
            return
        if remaining == 0:
            yield tuple(prefix)
            return
        for x in labels:
            if x >= n:
                counts[x - n] += 1
            prefix.append(x)
            yield from rec(prefix, counts)
            prefix.pop()
            if x >= n:
                counts[x - n] -= 1

    yield from rec([], [0] * s)


@functools.lru_cache(maxsize=64)
def tree_shapes(n: int, s: int) -> tuple[tuple[Edge, ...], ...]:
    """Canonical edge sets of all trees on ``n`` labelled terminals and ``s``
    unlabelled Steiner points of degree >= 3, sorted."""
    if n + s < 2:
        return ((),) if n + s == 1 and s == 0 else ()
    if s > 0 and n + s - 2 < 2 * s:
        return ()
    shapes = set()
    for seq in _sequences(n, s):
        shapes.add(canonical_edges(n, s, _prufer_to_edges(seq, n + s)))
    return tuple(sorted(shapes))


def enumerate_topologies(
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    max_steiner: int,
    max_terminals: int = MAX_TERMINALS,
    steiner_cap: int = MAX_STEINER,
) -> Iterator[Topology]:
    """Every tree topology spanning the terminals of ``mu - nu``.

    Yields topologies with 0, 1, ..., ``max_steiner`` Steiner points, each
    equivalence class under Steiner relabelling once, in canonical order.
    """
    terminals = terminals_from_measures(mu, nu)
    yield from topologies_for(terminals, max_steiner, max_terminals, steiner_cap)


def check_caps(n_terminals, max_steiner, max_terminals=MAX_TERMINALS, steiner_cap=MAX_STEINER):
    if n_terminals > max_terminals or max_steiner > steiner_cap:
        raise ResourceLimit(
            f"{n_terminals} terminals / {max_steiner} Steiner points exceed the cap "
            f"({max_terminals} / {steiner_cap})"
        )


def topologies_for(terminals, max_steiner, max_terminals=MAX_TERMINALS, steiner_cap=MAX_STEINER):
    n = len(terminals)
    check_caps(n, max_steiner, max_terminals, steiner_cap)
    for s in range(0, max_steiner + 1):
        for edges in tree_shapes(n, s):
            yield Topology(terminals, s, edges)
