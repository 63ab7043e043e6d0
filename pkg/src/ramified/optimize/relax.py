"""Steiner point placement at fixed topology.

The cost ``sum_e c_e |p_a - p_b|`` with ``c_e = w_e^alpha`` is convex in the
Steiner positions. Away from coincidences it is smooth, and a damped Newton
step (exact Hessian, Armijo backtracking) is tried first. Otherwise the
step minimizes the quadratic majorizer ``sum_e c_e |p_a - p_b|^2 / d_e``
(the simultaneous Weiszfeld step), which never increases the cost.

Both are singular when a Steiner point reaches a neighbour, and crawl when
the optimum sits there. Points are therefore grouped into clusters along
tree edges: nearby neighbours are snapped together whenever that does not
raise the cost, and a merged edge is split again when the subgradient
test says the cluster should open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import check_alpha
from .topology import Topology, TreeWeights, tree_weights

COINCIDE_TOL = 1e-12
SNAP_EVERY = 10
SNAP_RADIUS = 0.05
SPLIT_RTOL = 1e-9
# edges shorter than KINK * coincide count as collapsed
KINK = 1e3
MAX_ROUNDS = 50


@dataclass
class RelaxResult:
    positions: np.ndarray
    cost: float
    converged: bool
    iterations: int
    trace: list[float] = field(default_factory=list)
    residual: float = 0.0
    groups: tuple[tuple[int, ...], ...] = ()
    n_terminals: int = 0

    @property
    def steiner_positions(self) -> np.ndarray:
        return self.positions[self.n_terminals :]


class _Relaxer:
    def __init__(self, t: Topology, tw: TreeWeights, alpha: float, tol: float, max_iters: int):
        self.n = t.n_terminals
        self.N = t.n_vertices
        self.edges = np.array(t.tree_edges, dtype=np.int64).reshape(-1, 2)
        self.c = np.where(tw.degenerate, 0.0, tw.weights**alpha)
        self.tol = tol
        self.max_iters = max_iters
        terminals = t.terminal_points()
        span = np.ptp(terminals, axis=0) if len(terminals) else np.zeros(1)
        self.scale = max(1.0, float(np.linalg.norm(span)))
        self.coincide = COINCIDE_TOL * self.scale
        self.terminals = terminals

        self.merged: set[int] = set()
        self.locked: set[int] = set()
        self._rebuild()
        for i in np.flatnonzero(tw.degenerate):
            a, b = self.edges[i]
            if a >= self.n or b >= self.n:
                ra, rb = self.root[a], self.root[b]
                if not (self.fixed[ra] and self.fixed[rb]):
                    self.merged.add(int(i))
                    self.locked.add(int(i))
                    self._rebuild()

    def _rebuild(self):
        parent = list(range(self.N))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in self.merged:
            a, b = self.edges[i]
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                # terminals win as representatives, then lower ids
                if (rb < self.n) and not (ra < self.n) or (ra >= self.n and rb >= self.n and rb < ra):
                    ra, rb = rb, ra
                parent[rb] = ra
        self.root = np.array([find(x) for x in range(self.N)], dtype=np.int64)
        self.fixed = np.zeros(self.N, dtype=bool)
        for x in range(self.n):
            self.fixed[self.root[x]] = True
        self.free_roots = [int(r) for r in np.unique(self.root) if not self.fixed[r]]

    def members(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.root == r)

    def cost(self, P: np.ndarray) -> float:
        d = np.linalg.norm(P[self.edges[:, 0]] - P[self.edges[:, 1]], axis=1)
        return float(np.dot(self.c, d))

    def initial(self, init: np.ndarray | None) -> np.ndarray:
        P = np.zeros((self.N, self.terminals.shape[1]))
        P[: self.n] = self.terminals
        if init is not None:
            init = np.asarray(init, dtype=float)
            P[self.n :] = init[self.n : self.N]
            P = self._sync(P)
            if np.all(np.isfinite(P)):
                return P
        # harmonic placement: each free cluster at the mean of its neighbours
        return self._solve(P, np.ones(len(self.edges)))

    def _sync(self, P: np.ndarray) -> np.ndarray:
        return P[self.root]

    def _solve(self, P: np.ndarray, q: np.ndarray) -> np.ndarray:
        free = self.free_roots
        if not free:
            return self._sync(P)
        slot = {r: k for k, r in enumerate(free)}
        k = len(free)
        L = np.zeros((k, k))
        B = np.zeros((k, P.shape[1]))
        ra, rb = self.root[self.edges[:, 0]], self.root[self.edges[:, 1]]
        for i in np.flatnonzero((ra != rb) & (q > 0)):
            a, b, x = int(ra[i]), int(rb[i]), q[i]
            ia, ib = slot.get(a), slot.get(b)
            if ia is not None:
                L[ia, ia] += x
                if ib is not None:
                    L[ia, ib] -= x
                else:
                    B[ia] += x * P[b]
            if ib is not None:
                L[ib, ib] += x
                if ia is not None:
                    L[ib, ia] -= x
                else:
                    B[ib] += x * P[a]
        # tiny ridge keeps clusters that float freely where they are
        ridge = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(L)))) if k else 1.0)
        for j, r in enumerate(free):
            L[j, j] += ridge
            B[j] += ridge * P[r]
        X = np.linalg.solve(L, B)
        out = P.copy()
        for j, r in enumerate(free):
            out[r] = X[j]
        return self._sync(out)

    def _weights(self, P: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(P[self.edges[:, 0]] - P[self.edges[:, 1]], axis=1)
        return self.c / np.maximum(d, self.coincide)

    def _open_edges(self, P: np.ndarray):
        """Weighted edges between different clusters, at least one free."""
        ra, rb = self.root[self.edges[:, 0]], self.root[self.edges[:, 1]]
        d = np.linalg.norm(P[self.edges[:, 0]] - P[self.edges[:, 1]], axis=1)
        mask = (ra != rb) & (self.c > 0) & ~(self.fixed[ra] & self.fixed[rb])
        idx = np.flatnonzero(mask)
        return idx[np.argsort(d[idx], kind="stable")], d

    def _merge(self, P: np.ndarray, i: int) -> np.ndarray:
        a, b = self.edges[i]
        ra, rb = self.root[a], self.root[b]
        Q = P.copy()
        if self.fixed[ra]:
            target = P[ra]
        elif self.fixed[rb]:
            target = P[rb]
        else:
            target = 0.5 * (P[ra] + P[rb])
        Q[self.root == ra] = target
        Q[self.root == rb] = target
        return Q

    def snap(self, P: np.ndarray, f: float, radius: float):
        """Merge clusters joined by a short edge when that does not raise the cost."""
        changed = False
        order, d = self._open_edges(P)
        for i in order:
            if d[i] > radius:
                break
            a, b = self.edges[i]
            if self.root[a] == self.root[b] or (self.fixed[self.root[a]] and self.fixed[self.root[b]]):
                continue
            Q = self._merge(P, int(i))
            g = self.cost(Q)
            if g <= f:
                self.merged.add(int(i))
                self._rebuild()
                P, f, changed = Q, g, True
        return P, f, changed

    def _side(self, cluster: np.ndarray, cut: int, start: int) -> set[int]:
        inside = set(int(x) for x in cluster)
        side = {start}
        todo = [start]
        internal = [i for i in self.merged if i != cut]
        while todo:
            u = todo.pop()
            for i in internal:
                a, b = int(self.edges[i, 0]), int(self.edges[i, 1])
                for x, y in ((a, b), (b, a)):
                    if x == u and y in inside and y not in side:
                        side.add(y)
                        todo.append(y)
        return side

    def split(self, P: np.ndarray, f: float):
        """Open one merged edge if moving one side off the cluster lowers the cost."""
        for i in sorted(self.merged - self.locked):
            a, b = int(self.edges[i, 0]), int(self.edges[i, 1])
            cluster = self.members(int(self.root[a]))
            p = P[a]
            for start in (a, b):
                side = self._side(cluster, i, start)
                if any(x < self.n for x in side):
                    continue
                g = np.zeros_like(p)
                for j, (u, v) in enumerate(self.edges):
                    u, v = int(u), int(v)
                    if self.c[j] == 0 or j == i:
                        continue
                    if u in side and v not in side:
                        other = v
                    elif v in side and u not in side:
                        other = u
                    else:
                        continue
                    diff = p - P[other]
                    dist = float(np.linalg.norm(diff))
                    if dist > self.coincide:
                        g += self.c[j] * diff / dist
                gnorm = float(np.linalg.norm(g))
                if gnorm <= self.c[i] * (1 + SPLIT_RTOL) + 1e-15:
                    continue
                direction = -g / gnorm
                step = 1e-3 * self.scale
                for _ in range(60):
                    Q = P.copy()
                    Q[sorted(side)] = p + step * direction
                    h = self.cost(Q)
                    if h < f:
                        self.merged.discard(i)
                        self._rebuild()
                        return Q, h, True
                    step *= 0.5
        return P, f, False

    def _pull(self, P: np.ndarray, r: int):
        """Gradient on cluster ``r`` from its regular edges, and the total
        weight of its edges that are (nearly) collapsed."""
        g = np.zeros(P.shape[1])
        ball = 0.0
        for j, (u, v) in enumerate(self.edges):
            ru, rv = self.root[u], self.root[v]
            if ru == rv or self.c[j] == 0 or r not in (ru, rv):
                continue
            diff = P[u] - P[v] if ru == r else P[v] - P[u]
            dist = float(np.linalg.norm(diff))
            if dist > KINK * self.coincide:
                g += self.c[j] * diff / dist
            else:
                ball += self.c[j]
        return g, ball

    def residual(self, P: np.ndarray) -> float:
        """Largest distance from zero to a free cluster's subdifferential."""
        worst = 0.0
        for r in self.free_roots:
            g, ball = self._pull(P, r)
            worst = max(worst, float(np.linalg.norm(g)) - ball)
        return worst

    def _kinked(self, P: np.ndarray) -> list[int]:
        ra, rb = self.root[self.edges[:, 0]], self.root[self.edges[:, 1]]
        d = np.linalg.norm(P[self.edges[:, 0]] - P[self.edges[:, 1]], axis=1)
        mask = (ra != rb) & (self.c > 0) & (d <= KINK * self.coincide)
        return sorted({int(x) for x in np.concatenate([ra[mask], rb[mask]]) if not self.fixed[x]})

    def escape(self, P: np.ndarray, f: float, clusters: list[int]):
        """Move a free cluster off a neighbour it should not sit on."""
        for r in clusters:
            g, ball = self._pull(P, r)
            gnorm = float(np.linalg.norm(g))
            if gnorm <= ball * (1 + SPLIT_RTOL) + 1e-15:
                continue
            direction = -g / gnorm
            step = 1e-3 * self.scale
            mask = self.root == r
            for _ in range(60):
                Q = P.copy()
                Q[mask] = P[r] + step * direction
                h = self.cost(Q)
                if h < f:
                    return Q, h
                step *= 0.5
        return None

    def groups(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for r in np.unique(self.root):
            m = self.members(int(r))
            if len(m) > 1:
                out.append(tuple(int(x) for x in m))
        return tuple(out)

    def _newton(self, P: np.ndarray, f: float):
        """Damped Newton step on the free clusters, or None near a kink."""
        free = self.free_roots
        slot = {r: k for k, r in enumerate(free)}
        dim = P.shape[1]
        k = len(free)
        g = np.zeros((k, dim))
        H = np.zeros((k * dim, k * dim))
        eye = np.eye(dim)
        ra, rb = self.root[self.edges[:, 0]], self.root[self.edges[:, 1]]
        for i in np.flatnonzero((ra != rb) & (self.c > 0)):
            a, b = int(ra[i]), int(rb[i])
            ia, ib = slot.get(a), slot.get(b)
            if ia is None and ib is None:
                continue
            diff = P[a] - P[b]
            d = float(np.linalg.norm(diff))
            u = diff / d
            B = self.c[i] / d * (eye - np.outer(u, u))
            for x, sign in ((ia, 1.0), (ib, -1.0)):
                if x is not None:
                    g[x] += sign * self.c[i] * u
                    H[x * dim : (x + 1) * dim, x * dim : (x + 1) * dim] += B
            if ia is not None and ib is not None:
                H[ia * dim : (ia + 1) * dim, ib * dim : (ib + 1) * dim] -= B
                H[ib * dim : (ib + 1) * dim, ia * dim : (ia + 1) * dim] -= B
        ridge = 1e-12 * max(1.0, float(np.trace(H)))
        try:
            step = -np.linalg.solve(H + ridge * np.eye(k * dim), g.reshape(-1)).reshape(k, dim)
        except np.linalg.LinAlgError:
            return None
        slope = float(np.sum(g * step))
        if not slope < 0:
            return None
        t = 1.0
        for _ in range(40):
            Q = P.copy()
            for r, x in slot.items():
                Q[r] = P[r] + t * step[x]
            Q = self._sync(Q)
            h = self.cost(Q)
            if h <= f + 1e-4 * t * slope:
                return Q, h
            t *= 0.5
        return None

    def _weiszfeld(self, P: np.ndarray, f: float):
        Pn = self._solve(P, self._weights(P))
        fn = self.cost(Pn)
        if fn <= f:
            return Pn, fn
        # rounding safeguard: shorten the step, never go uphill
        D = Pn - P
        for _ in range(30):
            D *= 0.5
            Pn = P + D
            fn = self.cost(Pn)
            if fn <= f:
                return Pn, fn
        return None

    def run(self, init):
        P = self.initial(init)
        f = self.cost(P)
        trace = [f]
        P, f, _ = self.snap(P, f, self.coincide)
        iters = 0
        converged = False
        for _ in range(MAX_ROUNDS):
            converged = False
            while iters < self.max_iters and self.free_roots:
                iters += 1
                kinked = self._kinked(P)
                if kinked:
                    step = self.escape(P, f, kinked)
                else:
                    step = self._newton(P, f)
                step = step or self._weiszfeld(P, f)
                if step is None:
                    Pn, fn = P, f
                else:
                    Pn, fn = step
                delta = float(np.max(np.abs(Pn - P)))
                P, f = Pn, fn
                trace.append(f)
                P, f, _ = self.snap(P, f, self.coincide)
                small = delta < self.tol * self.scale
                if small or iters % SNAP_EVERY == 0:
                    P, f, merged = self.snap(P, f, SNAP_RADIUS * self.scale)
                    if merged:
                        trace.append(f)
                        continue
                if small:
                    converged = True
                    break
            if not self.free_roots:
                converged = True
            P, f, opened = self.split(P, f)
            if not opened:
                break
            trace.append(f)
        return P, f, converged, iters, trace


def relax_geometry(
    t: Topology,
    alpha: float,
    tol: float = 1e-10,
    max_iters: int = 10000,
    init: np.ndarray | None = None,
    weights: TreeWeights | None = None,
) -> RelaxResult:
    """Place the Steiner points of ``t`` to minimize the Gilbert energy.

    Parameters
    ----------
    t : Topology
    alpha : float
        Exponent in [0, 1].
    tol : float
        Stop when no coordinate moves more than ``tol`` (relative to the
        terminal spread when that exceeds 1).
    max_iters : int
        Iteration cap. Hitting it returns the best point so far with
        ``converged=False``.
    init : array, optional
        Starting positions for all vertices; terminal rows are ignored.
        Defaults to the harmonic placement.
    weights : TreeWeights, optional
        Precomputed :func:`tree_weights` of ``t``.

    Returns
    -------
    RelaxResult
        Positions of all vertices (terminals first), the final cost, the
        per-iteration cost trace (non-increasing), the stationarity
        residual over free clusters and the groups of coincident vertices.
    """
    alpha = check_alpha(alpha)
    tw = tree_weights(t) if weights is None else weights
    r = _Relaxer(t, tw, alpha, tol, max_iters)
    P, f, converged, iters, trace = r.run(init)
    return RelaxResult(
        positions=P,
        cost=f,
        converged=converged,
        iterations=iters,
        trace=trace,
        residual=r.residual(P),
        groups=r.groups(),
        n_terminals=t.n_terminals,
    )


def topology_cost(t: Topology, positions: np.ndarray, alpha: float) -> float:
    """Gilbert energy of ``t`` with vertices at ``positions``."""
    tw = tree_weights(t)
    c = np.where(tw.degenerate, 0.0, tw.weights ** check_alpha(alpha))
    e = np.array(t.tree_edges).reshape(-1, 2)
    return math.fsum(c * np.linalg.norm(positions[e[:, 0]] - positions[e[:, 1]], axis=1))
