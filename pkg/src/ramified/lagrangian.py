"""Irrigation plans: finitely many weighted vertex paths on a network.

Multiplicities live on undirected network segments. Two curves pass
through the same point exactly when they traverse the same segment;
coincidences at isolated vertices carry no length and are ignored by every
cost below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidPlan, check_alpha
from .eulerian import EmbeddedNetwork
from .measures import PROBABILITY_TOL, AtomicMeasure, make_measure

Curve = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class IrrigationPlan:
    """Probability measure ``sum_i w_i delta_{gamma_i}`` on polyline curves.

    Each curve is a vertex path whose consecutive vertices are distinct and
    joined by a network edge (in either orientation). A one-vertex path is
    the constant curve.
    """

    network: EmbeddedNetwork
    weights: np.ndarray
    paths: tuple[Curve, ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        paths = tuple(tuple(int(x) for x in p) for p in self.paths)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "paths", paths)
        w.setflags(write=False)

        if len(w) != len(paths):
            raise InvalidPlan(f"{len(w)} weights for {len(paths)} curves")
        if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise InvalidPlan("curve weights must be positive and finite")
        if abs(math.fsum(w) - 1.0) > PROBABILITY_TOL:
            raise InvalidPlan(f"curve weights sum to {math.fsum(w)!r}, not 1")
        n = self.network.n_vertices
        for path in paths:
            if not path:
                raise InvalidPlan("empty curve")
            for x in path:
                if not 0 <= x < n:
                    raise InvalidPlan(f"vertex id {x} out of range")
            for a, b in zip(path, path[1:]):
                if a == b:
                    raise InvalidPlan(f"repeated consecutive vertex {a} in {path}")
                if self.network.segment_of(a, b) is None:
                    raise InvalidPlan(f"step {a}->{b} is not a network edge")

    def __len__(self) -> int:
        return len(self.paths)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IrrigationPlan):
            return NotImplemented
        return (
            self.network == other.network
            and np.array_equal(self.weights, other.weights)
            and self.paths == other.paths
        )

    @cached_property
    def steps(self) -> tuple[tuple[int, ...], ...]:
        """Segment ids traversed by each curve, one entry per traversal."""
        seg = self.network.segment_of
        return tuple(tuple(seg(a, b) for a, b in zip(p, p[1:])) for p in self.paths)

    def to_dict(self) -> dict:
        return {
            "network": self.network.to_dict(),
            "curves": [{"w": float(w), "path": list(p)} for w, p in zip(self.weights, self.paths)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IrrigationPlan":
        net = EmbeddedNetwork.from_dict(data["network"])
        curves = data["curves"]
        return cls(net, [c["w"] for c in curves], tuple(tuple(c["path"]) for c in curves))


def make_plan(network: EmbeddedNetwork, curves: Sequence[tuple[float, Sequence[int]]]) -> IrrigationPlan:
    """Plan from ``(weight, path)`` pairs."""
    return IrrigationPlan(network, [w for w, _ in curves], tuple(tuple(p) for _, p in curves))


@dataclass(frozen=True)
class MultiplicityField:
    """Per-segment multiplicities of a plan.

    ``theta`` is the mass of curves using a segment at least once, ``m``
    the mean number of traversals. Indexed like ``network.segments``.
    """

    network: EmbeddedNetwork
    theta: np.ndarray
    m: np.ndarray


def curve_length(path: Sequence[int], network: EmbeddedNetwork) -> float:
    pts = network.vertices
    return math.fsum(float(np.linalg.norm(pts[b] - pts[a])) for a, b in zip(path, path[1:]))


def multiplicities(p: IrrigationPlan) -> MultiplicityField:
    k = len(p.network.segments)
    once: list[list[float]] = [[] for _ in range(k)]
    every: list[list[float]] = [[] for _ in range(k)]
    for w, steps in zip(p.weights, p.steps):
        counts: dict[int, int] = {}
        for s in steps:
            counts[s] = counts.get(s, 0) + 1
        for s, c in counts.items():
            once[s].append(w)
            every[s].append(w * c)
    theta = np.array([math.fsum(x) for x in once])
    m = np.array([math.fsum(x) for x in every])
    return MultiplicityField(p.network, theta, m)


def _theta_power(theta: np.ndarray, exponent: float) -> np.ndarray:
    out = np.zeros_like(theta)
    mask = theta > 0
    out[mask] = theta[mask] ** exponent
    return out


def irrigation_cost(p: IrrigationPlan, alpha: float) -> float:
    """Lagrangian cost: each curve pays ``theta^(alpha-1)`` per unit length.

    Summed over every traversal, so a segment crossed twice by the same
    curve is paid twice. Multiplicities are positive on traversed segments,
    so the result is always finite for a valid plan.
    """
    alpha = check_alpha(alpha)
    mult = multiplicities(p)
    unit = _theta_power(mult.theta, alpha - 1.0) * p.network.segment_lengths
    terms = []
    for w, steps in zip(p.weights, p.steps):
        for s in steps:
            assert mult.theta[s] > 0, "traversed segment with zero multiplicity"
            terms.append(w * unit[s])
    return math.fsum(terms)


def gilbert_energy_plan(p: IrrigationPlan, alpha: float) -> float:
    """``sum_s theta(s)^alpha |s|`` over segments with positive multiplicity."""
    alpha = check_alpha(alpha)
    theta = multiplicities(p).theta
    mask = theta > 0
    return math.fsum(theta[mask] ** alpha * p.network.segment_lengths[mask])


def full_energy(p: IrrigationPlan, alpha: float) -> float:
    """``sum_s theta(s)^(alpha-1) m(s) |s|``; equals :func:`irrigation_cost` for every plan."""
    alpha = check_alpha(alpha)
    mult = multiplicities(p)
    mask = mult.theta > 0
    unit = mult.theta[mask] ** (alpha - 1.0) * p.network.segment_lengths[mask]
    return math.fsum(unit * mult.m[mask])


def total_length(p: IrrigationPlan) -> float:
    return math.fsum(w * curve_length(path, p.network) for w, path in zip(p.weights, p.paths))


@dataclass(frozen=True)
class SimplicityReport:
    simple: tuple[bool, ...]
    essentially_simple: tuple[bool, ...]

    @property
    def all_simple(self) -> bool:
        return all(self.simple)

    @property
    def all_essentially_simple(self) -> bool:
        return all(self.essentially_simple)


def is_simple(p: IrrigationPlan) -> SimplicityReport:
    """A curve is simple if it repeats no vertex, essentially simple if it
    repeats no segment."""
    simple = tuple(len(set(path)) == len(path) for path in p.paths)
    ess = tuple(len(set(steps)) == len(steps) for steps in p.steps)
    return SimplicityReport(simple, ess)


def marginals(p: IrrigationPlan) -> tuple[AtomicMeasure, AtomicMeasure]:
    pts = p.network.vertices
    mu = make_measure([(pts[path[0]], w) for w, path in zip(p.weights, p.paths)], dim=p.network.dim)
    nu = make_measure([(pts[path[-1]], w) for w, path in zip(p.weights, p.paths)], dim=p.network.dim)
    return mu, nu


def remove_longest_loop(path: Curve, network: EmbeddedNetwork) -> Curve:
    """Cut the longest closed sub-path ``path[i..j]`` with ``path[i] == path[j]``.

    Ties go to the smallest ``i``. Returns ``path`` unchanged if it is simple.
    """
    pts = network.vertices
    steps = [float(np.linalg.norm(pts[b] - pts[a])) for a, b in zip(path, path[1:])]
    best = None
    for i in range(len(path)):
        for j in range(i + 1, len(path)):
            if path[i] == path[j]:
                length = math.fsum(steps[i:j])
                if best is None or length > best[0]:
                    best = (length, i, j)
    if best is None:
        return path
    _, i, j = best
    return path[: i + 1] + path[j + 1 :]


def simple_replacement(p: IrrigationPlan) -> IrrigationPlan:
    """Loop-erase every curve until no vertex repeats.

    Weights, endpoints and the order of curves are kept; each curve only
    loses segments, so multiplicities and length can only go down.
    """
    paths = []
    for path in p.paths:
        while len(set(path)) != len(path):
            path = remove_longest_loop(path, p.network)
        paths.append(path)
    return IrrigationPlan(p.network, p.weights, tuple(paths))
