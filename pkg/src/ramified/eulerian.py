"""Oriented weighted graphs: Gilbert energy, divergence and cycle removal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidNetwork, UnmatchedAtom, check_alpha
from .measures import AtomicMeasure, _key, make_measure

DIVERGENCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmbeddedNetwork:
    """Vertices in R^d joined by oriented straight edges.

    Invariants: finite coordinates, pairwise distinct vertex positions,
    no loop edge and no repeated ``(tail, head)`` pair. The reversed pair
    may coexist with a given edge.
    """

    vertices: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2:
            raise InvalidNetwork("vertices must be an (n, d) array")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "edges", e)
        v.setflags(write=False)
        e.setflags(write=False)

        if not np.all(np.isfinite(v)):
            raise InvalidNetwork("vertex coordinates must be finite")
        if len({_key(p) for p in v}) != len(v):
            raise InvalidNetwork("two vertices share the same coordinates")
        if len(e):
            if e.min() < 0 or e.max() >= len(v):
                raise InvalidNetwork("edge refers to a missing vertex")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidNetwork("edge with tail == head")
            if len({(int(a), int(b)) for a, b in e}) != len(e):
                raise InvalidNetwork("duplicate (tail, head) edge")

    @classmethod
    def build(cls, vertices, edges) -> "EmbeddedNetwork":
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim == 1:
            vertices = vertices.reshape(-1, 1)
        return cls(vertices, np.asarray(edges, dtype=np.int64).reshape(-1, 2))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        out = np.linalg.norm(d, axis=1) if len(d) else np.zeros(0)
        out.setflags(write=False)
        return out

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def vertex_index(self) -> dict[tuple[float, ...], int]:
        return {_key(p): i for i, p in enumerate(self.vertices)}

    @cached_property
    def segments(self) -> list[tuple[int, int]]:
        """Undirected vertex pairs ``(low, high)`` in order of first appearance."""
        seen: dict[tuple[int, int], int] = {}
        for a, b in self.edges:
            seen.setdefault((min(int(a), int(b)), max(int(a), int(b))), len(seen))
        return list(seen)

    @cached_property
    def segment_index(self) -> dict[tuple[int, int], int]:
        return {s: i for i, s in enumerate(self.segments)}

    @cached_property
    def segment_lengths(self) -> np.ndarray:
        if not self.segments:
            return np.zeros(0)
        s = np.array(self.segments)
        return np.linalg.norm(self.vertices[s[:, 1]] - self.vertices[s[:, 0]], axis=1)

    @cached_property
    def edge_segment(self) -> np.ndarray:
        idx = self.segment_index
        return np.array(
            [idx[(min(int(a), int(b)), max(int(a), int(b)))] for a, b in self.edges],
            dtype=np.int64,
        )

    def segment_of(self, u: int, v: int) -> int | None:
        return self.segment_index.get((min(u, v), max(u, v)))

    def locate(self, point: Sequence[float]) -> int | None:
        """Vertex id at exactly ``point``, or None."""
        return self.vertex_index.get(_key(point))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddedNetwork):
            return NotImplemented
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.edges, other.edges
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "edges": self.edges.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddedNetwork":
        dim = int(data["dim"])
        vertices = np.array(data["vertices"], dtype=float).reshape(-1, dim)
        if any(len(p) != dim for p in data["vertices"]):
            raise DimensionMismatch("vertex with wrong number of coordinates")
        return cls(vertices, np.array(data["edges"], dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True, eq=False)
class FlowField:
    """Nonnegative per-edge weights on an :class:`EmbeddedNetwork`.

    This is the canonical form; use :func:`make_flow` to build one from
    signed weights.
    """

    network: EmbeddedNetwork
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(w) != self.network.n_edges:
            raise InvalidNetwork(
                f"{len(w)} weights for {self.network.n_edges} edges"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidNetwork("canonical flow weights must be finite and >= 0")
        w = w + 0.0
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.network.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowField):
            return NotImplemented
        return self.network == other.network and np.array_equal(self.weights, other.weights)

    def with_weights(self, weights) -> "FlowField":
        """Same network, new signed weights (normalized by :func:`make_flow`)."""
        return make_flow(self.network, weights)

    def __add__(self, other: "FlowField") -> "FlowField":
        return self.with_weights(self.weights + _aligned(self, other))

    def __sub__(self, other: "FlowField") -> "FlowField":
        return self.with_weights(self.weights - _aligned(self, other))

    def scaled(self, factor: float) -> "FlowField":
        return FlowField(self.network, self.weights * factor)

    def to_dict(self) -> dict:
        out = self.network.to_dict()
        out["weights"] = self.weights.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FlowField":
        return make_flow(EmbeddedNetwork.from_dict(data), data.get("weights", []))


def _aligned(v: FlowField, w: FlowField) -> np.ndarray:
    """Weights of ``w`` expressed along the edge orientations of ``v``."""
    if not np.array_equal(v.network.vertices, w.network.vertices):
        raise InvalidNetwork("flows live on different vertex sets")
    out = np.zeros(v.network.n_edges)
    index = v.network.edge_index
    for (a, b), x in zip(w.network.edges, w.weights):
        a, b = int(a), int(b)
        if (a, b) in index:
            out[index[(a, b)]] += x
        elif (b, a) in index:
            out[index[(b, a)]] -= x
        elif x != 0.0:
            raise InvalidNetwork(f"edge {(a, b)} is not in the network")
    return out


def make_flow(network: EmbeddedNetwork, weights) -> FlowField:
    """Build a canonical FlowField from signed weights.

    A negative weight means flow against the stored orientation. Such
    edges are flipped in place (same edge id). When the reversed edge is
    already present, the two edges exchange their negative parts instead,
    so an anti-parallel pair is kept as is and never cancelled here.
    """
    w = np.array(weights, dtype=float).reshape(-1)
    if len(w) != network.n_edges:
        raise InvalidNetwork(f"{len(w)} weights for {network.n_edges} edges")
    if not np.any(w < 0):
        return FlowField(network, w)

    edges = network.edges.copy()
    out = w.copy()
    index = network.edge_index
    done = set()
    for i in np.flatnonzero(w < 0):
        i = int(i)
        if i in done:
            continue
        a, b = int(edges[i, 0]), int(edges[i, 1])
        j = index.get((b, a))
        if j is None:
            edges[i] = (b, a)
            out[i] = -w[i]
        else:
            out[i] = max(w[i], 0.0) + max(-w[j], 0.0)
            out[j] = max(w[j], 0.0) + max(-w[i], 0.0)
            done.add(j)
        done.add(i)
    return FlowField(EmbeddedNetwork(network.vertices, edges), out)


def canonicalize(v: FlowField) -> FlowField:
    """Drop zero-weight edges, keeping every vertex."""
    keep = v.weights > 0
    if keep.all():
        return v
    net = EmbeddedNetwork(v.network.vertices, v.network.edges[keep])
    return FlowField(net, v.weights[keep])


def gilbert_energy(v: FlowField, alpha: float) -> float:
    """Gilbert energy ``sum_e w(e)^alpha |e|`` over edges with positive weight.

    Zero-weight edges count as absent, including for ``alpha = 0``.
    """
    alpha = check_alpha(alpha)
    mask = v.weights > 0
    if not mask.any():
        return 0.0
    terms = v.weights[mask] ** alpha * v.network.lengths[mask]
    return math.fsum(terms)


def net_outflow(v: FlowField) -> np.ndarray:
    """Outgoing minus incoming weight at every vertex."""
    out = np.zeros(v.network.n_vertices)
    np.add.at(out, v.network.edges[:, 0], v.weights)
    np.add.at(out, v.network.edges[:, 1], -v.weights)
    return out


@dataclass(frozen=True)
class SignedAtomic:
    """Signed atomic measure ``positive - negative`` with disjoint supports."""

    positive: AtomicMeasure
    negative: AtomicMeasure

    @property
    def is_empty(self) -> bool:
        return self.positive.is_empty and self.negative.is_empty

    def to_dict(self) -> dict:
        return {"positive": self.positive.to_dict(), "negative": self.negative.to_dict()}


def divergence(v: FlowField, tol: float = DIVERGENCE_TOL) -> SignedAtomic:
    net = net_outflow(v)
    pts = v.network.vertices
    pos = [(pts[i], net[i]) for i in np.flatnonzero(net > tol)]
    neg = [(pts[i], -net[i]) for i in np.flatnonzero(net < -tol)]
    return SignedAtomic(make_measure(pos, dim=v.dim), make_measure(neg, dim=v.dim))


@dataclass(frozen=True)
class KirchhoffReport:
    ok: bool
    residual: np.ndarray
    max_residual: float

    def __bool__(self) -> bool:
        return self.ok


def vertex_masses(network: EmbeddedNetwork, measure: AtomicMeasure) -> np.ndarray:
    """Masses of ``measure`` per network vertex; every atom must be a vertex."""
    if measure.dim != network.dim:
        raise DimensionMismatch(f"measure in R^{measure.dim}, network in R^{network.dim}")
    out = np.zeros(network.n_vertices)
    for p, m in measure:
        i = network.locate(p)
        if i is None:
            raise UnmatchedAtom(f"atom at {p} is not a network vertex")
        out[i] += m
    return out


def check_kirchhoff(
    v: FlowField, mu: AtomicMeasure, nu: AtomicMeasure, tol: float = DIVERGENCE_TOL
) -> KirchhoffReport:
    """Check ``div v = mu - nu`` vertexwise.

    The per-vertex residual ``div v - (mu - nu)`` is always returned.
    """
    residual = net_outflow(v) - (vertex_masses(v.network, mu) - vertex_masses(v.network, nu))
    worst = float(np.max(np.abs(residual))) if len(residual) else 0.0
    return KirchhoffReport(worst <= tol, residual, worst)


def find_cycle(v: FlowField) -> list[int] | None:
    """Directed cycle in the positive-weight support, as edge ids.

    Depth-first search from vertices in index order, following outgoing
    edges in increasing id, so the answer is deterministic.
    """
    n = v.network.n_vertices
    out_edges: list[list[int]] = [[] for _ in range(n)]
    for i, (a, _) in enumerate(v.network.edges):
        if v.weights[i] > 0:
            out_edges[int(a)].append(i)
    heads = v.network.edges[:, 1]

    color = [0] * n  # 0 new, 1 on stack, 2 finished
    for root in range(n):
        if color[root]:
            continue
        color[root] = 1
        path_edges: list[int] = []
        pos_on_path = {root: 0}
        stack = [(root, iter(out_edges[root]))]
        while stack:
            u, it = stack[-1]
            e = next(it, None)
            if e is None:
                color[u] = 2
                stack.pop()
                del pos_on_path[u]
                if path_edges:
                    path_edges.pop()
                continue
            x = int(heads[e])
            if color[x] == 1:
                return path_edges[pos_on_path[x]:] + [e]
            if color[x] == 0:
                color[x] = 1
                pos_on_path[x] = len(path_edges) + 1
                path_edges.append(e)
                stack.append((x, iter(out_edges[x])))
    return None


def cycle_flow(v: FlowField, cycle: Sequence[int], amount: float) -> FlowField:
    """Constant weight ``amount`` on the edges of ``cycle``, zero elsewhere."""
    w = np.zeros(v.network.n_edges)
    w[list(cycle)] = amount
    return FlowField(v.network, w)


def cancel_cycles(v: FlowField) -> FlowField:
    """Remove every directed cycle from the support.

    Each round subtracts the smallest weight around the cycle found by
    :func:`find_cycle`; that edge drops to exactly zero, so at most
    ``n_edges`` rounds run. Divergence is unchanged and no weight grows.
    """
    return cancel_cycles_counted(v)[0]


def cancel_cycles_counted(v: FlowField) -> tuple[FlowField, int]:
    w = v.weights.copy()
    current = v
    rounds = 0
    while True:
        cycle = find_cycle(current)
        if cycle is None:
            return current, rounds
        c = min(w[cycle])
        for e in cycle:
            w[e] = 0.0 if w[e] == c else w[e] - c
        current = FlowField(v.network, w)
        rounds += 1
