"""Conversions between irrigation plans and flows.

``plan_to_flow`` projects a plan onto its mean flow and intensity;
``flow_to_plan`` splits a Kirchhoff-feasible flow into simple weighted
paths plus a divergence-free leftover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import KirchhoffViolation, check_alpha
from .eulerian import (
    FlowField,
    check_kirchhoff,
    gilbert_energy,
    make_flow,
    vertex_masses,
)
from .lagrangian import (
    IrrigationPlan,
    full_energy,
    gilbert_energy_plan,
    irrigation_cost,
    multiplicities,
)
from .measures import PROBABILITY_TOL, AtomicMeasure

KIRCHHOFF_TOL = 1e-9
# residual masses and weights at or below this are treated as exhausted
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class PlanFlow:
    flow: FlowField
    intensity: np.ndarray


def plan_to_flow(p: IrrigationPlan) -> PlanFlow:
    """Mean flow and intensity of a plan, per network edge.

    Signed traversals are netted on each undirected segment. The net is
    stored on the edge of that segment pointing along it (the edge is
    flipped if the network only has the other orientation); the segment's
    intensity, i.e. its full multiplicity, goes to the same edge.
    """
    net = p.network
    k = len(net.segments)
    signed: list[list[float]] = [[] for _ in range(k)]
    for w, path, steps in zip(p.weights, p.paths, p.steps):
        for (a, _), s in zip(zip(path, path[1:]), steps):
            signed[s].append(w if a == net.segments[s][0] else -w)
    seg_flow = np.array([math.fsum(x) for x in signed])
    seg_intensity = multiplicities(p).m

    by_segment: list[list[int]] = [[] for _ in range(k)]
    for e, s in enumerate(net.edge_segment):
        by_segment[s].append(e)

    weights = np.zeros(net.n_edges)
    intensity = np.zeros(net.n_edges)
    for s, edges in enumerate(by_segment):
        low = net.segments[s][0]
        x = seg_flow[s]
        target = edges[0]
        for e in edges:
            along = 1.0 if int(net.edges[e, 0]) == low else -1.0
            if x * along > 0:
                target = e
                break
        along = 1.0 if int(net.edges[target, 0]) == low else -1.0
        weights[target] = along * x
        intensity[target] = seg_intensity[s]
    return PlanFlow(make_flow(net, weights), intensity)


@dataclass(frozen=True)
class Decomposition:
    """Plan ``eta`` and divergence-free ``cycle_residual`` with ``v = v_eta + w``."""

    plan: IrrigationPlan
    cycle_residual: FlowField

    def reconstruction(self) -> FlowField:
        return plan_to_flow(self.plan).flow + self.cycle_residual


def _find_path(start, out_edges, heads, residual, demand):
    """Simple path from ``start`` to a vertex with residual demand.

    Depth-first, lowest edge id first; a branch that returns to a vertex
    already on the path is abandoned, which erases the loop it would form.
    """
    if demand[start] > ZERO_TOL:
        return [start], []
    visited = {start}
    vertices = [start]
    edges: list[int] = []
    stack = [iter(out_edges[start])]
    while stack:
        e = next(stack[-1], None)
        if e is None:
            stack.pop()
            vertices.pop()
            if edges:
                edges.pop()
            continue
        if residual[e] <= ZERO_TOL:
            continue
        x = int(heads[e])
        if x in visited:
            continue
        visited.add(x)
        vertices.append(x)
        edges.append(e)
        if demand[x] > ZERO_TOL:
            return vertices, edges
        stack.append(iter(out_edges[x]))
    return None


def flow_to_plan(
    v: FlowField, mu: AtomicMeasure, nu: AtomicMeasure, tol: float = KIRCHHOFF_TOL
) -> Decomposition:
    """Split ``v`` into simple weighted paths from ``mu`` to ``nu`` plus a cycle.

    Anti-parallel edge pairs are first netted, their common part going to
    the residual. Then, repeatedly, the lowest vertex with residual supply
    is joined to residual demand by :func:`_find_path`, and the bottleneck
    of supply, demand and edge weights is moved onto that path. Every
    extraction exhausts one edge, supply or demand, so the loop runs at most
    ``n_edges + n_supply + n_demand`` times. What is left of ``v`` is
    divergence free and carried along ``v``'s own edges.

    Residuals are tracked in exact rational arithmetic, so the intensity of
    the plan is at most ``v`` on every edge with no rounding slack. Weights
    are renormalized only if they miss 1 by more than 1e-12.

    Raises
    ------
    KirchhoffViolation
        If ``div v`` differs from ``mu - nu`` by more than ``tol``.
    """
    report = check_kirchhoff(v, mu, nu, tol)
    if not report.ok:
        raise KirchhoffViolation(f"max residual {report.max_residual:.3e} exceeds {tol:g}")

    net = v.network
    # exact bookkeeping: netting is done in rationals and every extracted
    # amount is a float rounded down, so the curves never carry more than
    # v on any segment, not even by an ulp
    left = [Fraction(float(x)) for x in v.weights]
    index = net.edge_index
    for e, (a, b) in enumerate(net.edges):
        j = index.get((int(b), int(a)))
        if j is not None and e < j:
            c = min(left[e], left[j])
            left[e] -= c
            left[j] -= c
    # the antiparallel common part stays in the cycle residual
    cycle_part = np.array([float(Fraction(float(x)) - y) for x, y in zip(v.weights, left)])

    supply = [Fraction(float(x)) for x in vertex_masses(net, mu)]
    demand = [Fraction(float(x)) for x in vertex_masses(net, nu)]
    out_edges: list[list[int]] = [[] for _ in range(net.n_vertices)]
    for e, a in enumerate(net.edges[:, 0]):
        out_edges[int(a)].append(e)
    heads = net.edges[:, 1]

    curves: list[tuple[float, tuple[int, ...]]] = []
    budget = net.n_edges + 2 * (len(mu) + len(nu)) + 1
    for _ in range(budget):
        sources = [i for i, x in enumerate(supply) if x > ZERO_TOL]
        if not sources:
            break
        start = sources[0]
        found = _find_path(start, out_edges, heads, left, demand)
        if found is None:
            if supply[start] <= tol:
                # leftover within the Kirchhoff tolerance
                supply[start] = Fraction(0)
                continue
            raise KirchhoffViolation(f"no residual path leaves vertex {start}")
        vertices, edges = found
        end = vertices[-1]
        exact = min([supply[start], demand[end]] + [left[e] for e in edges])
        amount = float(exact)
        if Fraction(amount) > exact:
            amount = math.nextafter(amount, 0.0)
        step = Fraction(amount)
        for e in edges:
            left[e] -= step
        supply[start] -= step
        demand[end] -= step
        curves.append((amount, tuple(vertices)))
    if any(x > ZERO_TOL for x in supply):
        raise RuntimeError("path extraction did not terminate")

    residual = np.array([float(x) for x in left])
    residual[residual <= ZERO_TOL] = 0.0
    weights = [w for w, _ in curves]
    total = math.fsum(weights)
    if abs(total - 1.0) > PROBABILITY_TOL:
        weights = [w / total for w in weights]
    plan = IrrigationPlan(net, weights, tuple(p for _, p in curves))
    return Decomposition(plan, FlowField(net, residual + cycle_part))


@dataclass(frozen=True)
class EquivalenceReport:
    I_alpha: float
    E_alpha: float
    full_E_alpha: float
    M_alpha: float
    max_intensity_gap: float
    costs_equal: bool
    intensity_equals_flow: bool
    flow_matches: bool | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_equivalence(
    p: IrrigationPlan,
    v: FlowField | None = None,
    alpha: float = 0.5,
    rtol: float = 1e-9,
) -> EquivalenceReport:
    """Compare the Lagrangian cost of ``p`` with the alpha-mass of its flow.

    ``I_alpha >= M_alpha`` holds for essentially simple plans; equality,
    together with ``intensity == |flow|``, signals that no segment is
    crossed in opposite directions. When ``v`` is given, ``flow_matches``
    tells whether it coincides with the plan's flow edgewise (1e-9).
    """
    alpha = check_alpha(alpha)
    proj = plan_to_flow(p)
    I = irrigation_cost(p, alpha)
    M = gilbert_energy(proj.flow, alpha)
    gap = float(np.max(proj.intensity - proj.flow.weights)) if len(proj.intensity) else 0.0
    matches = None
    if v is not None:
        matches = bool(np.allclose((v - proj.flow).weights, 0.0, rtol=0.0, atol=1e-9))
    return EquivalenceReport(
        I_alpha=I,
        E_alpha=gilbert_energy_plan(p, alpha),
        full_E_alpha=full_energy(p, alpha),
        M_alpha=M,
        max_intensity_gap=max(gap, 0.0),
        costs_equal=abs(I - M) <= rtol * max(1.0, abs(I)),
        intensity_equals_flow=gap <= ZERO_TOL,
        flow_matches=matches,
    )
