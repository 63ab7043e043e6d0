"""Minimum Gilbert energy networks between two atomic measures.

The search runs over trees spanning the signed terminals ``mu - nu`` plus
up to ``max_steiner`` free branch points. On a tree the Kirchhoff weights
are fixed by the terminal masses, so each candidate costs one convex
relaxation of the branch point positions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DimensionMismatch, UnbalancedMass, check_alpha
from ..eulerian import EmbeddedNetwork, FlowField, cancel_cycles, canonicalize, gilbert_energy
from ..measures import AtomicMeasure, _key
from .relax import relax_geometry
from .topology import (
    BALANCE_TOL,
    MAX_TERMINALS,
    Topology,
    canonical_edges,
    check_caps,
    terminals_from_measures,
    topologies_for,
    tree_weights,
)

IMPROVEMENT_TOL = 1e-10
MERGE_TOL = 1e-12
MODES = ("exhaustive", "local")


@dataclass(frozen=True)
class SolveConfig:
    alpha: float
    max_steiner: int = 3
    relax_tol: float = 1e-10
    relax_max_iters: int = 10000
    moves_budget: int = 500
    rng_seed: int = 0
    max_terminals: int = MAX_TERMINALS

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.max_steiner < 0:
            raise ValueError("max_steiner must be >= 0")
        if self.relax_tol <= 0 or self.relax_max_iters <= 0 or self.moves_budget <= 0:
            raise ValueError("tolerances and budgets must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    flow: FlowField
    cost: float
    trace: list[float] = field(default_factory=list)
    topology: Topology | None = None
    positions: np.ndarray | None = None
    evaluated: int = 0
    converged: bool = True


@dataclass
class _Candidate:
    topology: Topology
    positions: np.ndarray
    cost: float
    flow: FlowField
    converged: bool


class _Evaluator:
    def __init__(self, terminals, atom_points, cfg: SolveConfig):
        self.terminals = terminals
        self.atom_points = atom_points
        self.cfg = cfg
        self.count = 0
        pts = np.array([p for p, _ in terminals], dtype=float)
        self.scale = max(1.0, float(np.linalg.norm(np.ptp(pts, axis=0))))

    def __call__(self, t: Topology, init: np.ndarray | None = None) -> _Candidate:
        self.count += 1
        tw = tree_weights(t)
        if t.steiner_count == 0:
            P = t.terminal_points()
            converged = True
        else:
            r = relax_geometry(
                t, self.cfg.alpha, tol=self.cfg.relax_tol, max_iters=self.cfg.relax_max_iters,
                init=init, weights=tw,
            )
            P, converged = r.positions, r.converged
        flow = build_flow(t, P, self.atom_points, scale=self.scale)
        return _Candidate(t, P, gilbert_energy(flow, self.cfg.alpha), flow, converged)


def build_flow(t: Topology, positions: np.ndarray, atom_points=(), scale: float = 1.0) -> FlowField:
    """Tree ``t`` embedded at ``positions`` as a canonical FlowField.

    Every atom point becomes a vertex (first, in the given order), followed
    by the Steiner points that do not coincide with an existing vertex.
    Coincident vertices are identified, zero-weight and collapsed edges
    dropped, parallel edges netted, and any cycle created by the
    identification cancelled.
    """
    tw = tree_weights(t)
    verts: list[np.ndarray] = []
    index: dict[tuple, int] = {}

    def vertex_id(p) -> int:
        key = _key(p)
        if key in index:
            return index[key]
        for i, q in enumerate(verts):
            if np.linalg.norm(q - p) <= MERGE_TOL * scale:
                index[key] = i
                return i
        verts.append(np.asarray(p, dtype=float))
        index[key] = len(verts) - 1
        return len(verts) - 1

    for p in atom_points:
        vertex_id(np.asarray(p, dtype=float))
    ids = [vertex_id(positions[i]) for i in range(t.n_vertices)]

    net: dict[tuple[int, int], list[float]] = {}
    for (a, b), w, degenerate in zip(tw.oriented, tw.weights, tw.degenerate):
        a, b = ids[a], ids[b]
        if degenerate or a == b:
            continue
        key = (min(a, b), max(a, b))
        net.setdefault(key, []).append(w if a < b else -w)
    edges, weights = [], []
    for (a, b), parts in sorted(net.items()):
        x = math.fsum(parts)
        if x > 0:
            edges.append((a, b))
            weights.append(x)
        elif x < 0:
            edges.append((b, a))
            weights.append(-x)
    dim = t.dim if t.terminals else (len(atom_points[0]) if len(atom_points) else 1)
    V = np.array(verts, dtype=float).reshape(-1, dim)
    flow = FlowField(EmbeddedNetwork(V, np.array(edges, dtype=np.int64).reshape(-1, 2)), weights)
    return canonicalize(cancel_cycles(flow))


def _check_inputs(mu: AtomicMeasure, nu: AtomicMeasure):
    if not mu.is_empty and not nu.is_empty and mu.dim != nu.dim:
        raise DimensionMismatch(f"mu lives in R^{mu.dim}, nu in R^{nu.dim}")
    gap = mu.total_mass - nu.total_mass
    if abs(gap) > BALANCE_TOL:
        raise UnbalancedMass(f"total masses differ by {gap!r}")


def _atom_points(mu: AtomicMeasure, nu: AtomicMeasure) -> list[tuple]:
    return sorted({p for p, _ in mu} | {p for p, _ in nu})


def greedy_matching(terminals) -> list[tuple[int, int, float]]:
    """Transport plan built by moving mass along the shortest pairs first.

    Returns ``(source, sink, amount)`` triples over terminal ids. Each step
    exhausts a source or a sink, so the support is a forest.
    """
    pts = np.array([p for p, _ in terminals], dtype=float)
    supply = {i: m for i, (_, m) in enumerate(terminals) if m > 0}
    demand = {i: -m for i, (_, m) in enumerate(terminals) if m < 0}
    pairs = sorted(
        (float(np.linalg.norm(pts[i] - pts[j])), i, j) for i in supply for j in demand
    )
    out = []
    for _, i, j in pairs:
        x = min(supply[i], demand[j])
        if x <= 0:
            continue
        out.append((i, j, x))
        supply[i] -= x
        demand[j] -= x
    return out


def matching_baseline(mu: AtomicMeasure, nu: AtomicMeasure, alpha: float) -> float:
    """Cost of sending each greedy-matched amount along its own straight segment."""
    alpha = check_alpha(alpha)
    terminals = terminals_from_measures(mu, nu)
    pts = np.array([p for p, _ in terminals], dtype=float)
    return math.fsum(x**alpha * float(np.linalg.norm(pts[i] - pts[j])) for i, j, x in greedy_matching(terminals))


def initial_tree(terminals) -> tuple[tuple[int, int], ...]:
    """Support of the greedy matching, completed to a spanning tree.

    Components are joined by their shortest connecting pairs (Kruskal),
    and those joins carry no net mass.
    """
    n = len(terminals)
    pts = np.array([p for p, _ in terminals], dtype=float)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for i, j, _ in greedy_matching(terminals):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((min(i, j), max(i, j)))
    pairs = sorted(
        (float(np.linalg.norm(pts[i] - pts[j])), i, j) for i in range(n) for j in range(i + 1, n)
    )
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
    return tuple(sorted(edges))


def _cleanup(n: int, s: int, edges, positions):
    """Remove Steiner points of degree 1 and splice out those of degree 2."""
    edges = [tuple(e) for e in edges]
    alive = list(range(n + s))
    changed = True
    while changed:
        changed = False
        deg: dict[int, list[int]] = {}
        for a, b in edges:
            deg.setdefault(a, []).append(b)
            deg.setdefault(b, []).append(a)
        for x in alive:
            if x < n:
                continue
            nb = deg.get(x, [])
            if len(nb) >= 3:
                continue
            edges = [e for e in edges if x not in e]
            if len(nb) == 2:
                edges.append((min(nb), max(nb)))
            alive.remove(x)
            changed = True
            break
    relabel = {x: i for i, x in enumerate(alive)}
    new_edges = tuple(sorted((min(relabel[a], relabel[b]), max(relabel[a], relabel[b])) for a, b in edges))
    return len(alive) - n, new_edges, positions[alive]


def _neighbours(n_vertices: int, edges) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _side(adj, start: int, cut: tuple[int, int]) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        for x in adj[u]:
            if {u, x} == set(cut) or x in seen:
                continue
            seen.add(x)
            todo.append(x)
    return seen


def _proposals(t: Topology, positions: np.ndarray, max_steiner: int):
    """Neighbouring trees as ``(steiner_count, edges, init_positions)``."""
    n, s = t.n_terminals, t.steiner_count
    N = n + s
    edges = list(t.tree_edges)
    adj = _neighbours(N, edges)

    # split: pull two neighbours of u onto a new branch point
    if s < max_steiner:
        for u in range(N):
            if u >= n and len(adj[u]) < 4:
                continue
            nb = sorted(adj[u])
            for i in range(len(nb)):
                for j in range(i + 1, len(nb)):
                    a, b = nb[i], nb[j]
                    x = N
                    new = [e for e in edges if set(e) not in ({u, a}, {u, b})]
                    new += [(u, x), (a, x), (b, x)]
                    P = np.vstack([positions, (positions[u] + positions[a] + positions[b]) / 3.0])
                    yield s + 1, new, P

    # contract a Steiner point into a neighbour
    for a, b in edges:
        for x, y in ((a, b), (b, a)):
            if x < n:
                continue
            new = []
            for e in edges:
                if e == (a, b):
                    continue
                p, q = (y if v == x else v for v in e)
                new.append((min(p, q), max(p, q)))
            yield s, new, positions.copy()

    # reconnect: cut an edge, rejoin the two sides differently
    for cut in edges:
        side = _side(adj, cut[0], cut)
        for a in sorted(side):
            for b in range(N):
                if b in side or {a, b} == set(cut):
                    continue
                if (a >= n and len(adj[a]) >= 3 and a not in cut) or (b >= n and len(adj[b]) >= 3 and b not in cut):
                    continue
                new = [e for e in edges if e != cut] + [(min(a, b), max(a, b))]
                yield s, new, positions.copy()


def _local_search(terminals, evaluate: _Evaluator, cfg: SolveConfig):
    n = len(terminals)
    rng = np.random.default_rng(cfg.rng_seed)
    t = Topology(terminals, 0, initial_tree(terminals))
    best = evaluate(t)
    trace = [best.cost]
    seen = {canonical_edges(n, 0, t.tree_edges) + (0,)}
    budget = cfg.moves_budget
    improved = True
    while improved and budget > 0:
        improved = False
        props = list(_proposals(best.topology, best.positions, cfg.max_steiner))
        for k in rng.permutation(len(props)):
            s, edges, P = props[int(k)]
            s, edges, P = _cleanup(n, s, edges, P)
            key = canonical_edges(n, s, edges) + (s,)
            if key in seen:
                continue
            seen.add(key)
            budget -= 1
            cand = evaluate(Topology(terminals, s, edges), init=P)
            if cand.cost < best.cost - IMPROVEMENT_TOL:
                best = cand
                trace.append(cand.cost)
                improved = True
                break
            if budget <= 0:
                break
    return best, trace


def solve_discrete(
    mu: AtomicMeasure, nu: AtomicMeasure, cfg: SolveConfig, mode: str = "exhaustive"
) -> SolveResult:
    """Find a tree-shaped flow from ``mu`` to ``nu`` of small Gilbert energy.

    Parameters
    ----------
    mu, nu : AtomicMeasure
        Source and target, with equal total mass.
    cfg : SolveConfig
    mode : {"exhaustive", "local"}
        ``exhaustive`` relaxes every topology with at most
        ``cfg.max_steiner`` branch points and returns the best one, ties
        broken by canonical topology id. ``local`` starts from the greedy
        matching tree and applies split, contract and reconnect moves in an
        order drawn from ``cfg.rng_seed``, accepting strict improvements.

    Returns
    -------
    SolveResult
        Kirchhoff-feasible, cycle-free flow on the atom points plus the
        branch points it uses, its energy, and the cost trace (best so far
        per topology, or per accepted move).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    _check_inputs(mu, nu)
    terminals = terminals_from_measures(mu, nu)
    atoms = _atom_points(mu, nu)
    if not terminals:
        dim = mu.dim if not mu.is_empty else nu.dim
        V = np.array(atoms, dtype=float).reshape(-1, dim)
        flow = FlowField(EmbeddedNetwork(V, np.zeros((0, 2), dtype=np.int64)), [])
        return SolveResult(flow, 0.0, [0.0])

    evaluate = _Evaluator(terminals, atoms, cfg)
    if mode == "exhaustive":
        best = None
        trace = []
        converged = True
        for t in topologies_for(terminals, cfg.max_steiner, cfg.max_terminals):
            cand = evaluate(t)
            converged &= cand.converged
            if best is None or (cand.cost, t.key) < (best.cost, best.topology.key):
                best = cand
            trace.append(best.cost)
    else:
        check_caps(len(terminals), cfg.max_steiner, cfg.max_terminals)
        best, trace = _local_search(terminals, evaluate, cfg)
        converged = best.converged
    return SolveResult(
        flow=best.flow,
        cost=best.cost,
        trace=trace,
        topology=best.topology,
        positions=best.positions,
        evaluated=evaluate.count,
        converged=converged,
    )
