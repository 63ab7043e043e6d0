"""Recursive center-to-subcenter tree on the dyadic cubes of [0,1]^d.

Level ``j`` joins the center of every cube of side ``2^-j`` to the centers
of its ``2^d`` children, each edge carrying the child's mass ``2^(-d(j+1))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ResourceLimit, check_alpha
from ..eulerian import EmbeddedNetwork, FlowField, gilbert_energy
from ..measures import max_atoms


@dataclass(frozen=True)
class DyadicTree:
    flow: FlowField
    level: np.ndarray  # level of each edge

    @property
    def levels(self) -> int:
        return int(self.level.max()) + 1 if len(self.level) else 0


@dataclass(frozen=True)
class DyadicCost:
    dimension: int
    alpha: float
    levels: int
    cost: float
    level_costs: tuple[float, ...]
    ratios: tuple[float, ...]

    @property
    def predicted_ratio(self) -> float:
        return 2.0 ** (self.dimension * (1.0 - self.alpha) - 1.0)

    @property
    def threshold(self) -> float:
        """Exponent above which the level costs decay."""
        return 1.0 - 1.0 / self.dimension

    def to_dict(self) -> dict:
        return {
            "dim": self.dimension,
            "alpha": self.alpha,
            "levels": self.levels,
            "cost": self.cost,
            "level_costs": list(self.level_costs),
            "ratios": list(self.ratios),
            "predicted_ratio": self.predicted_ratio,
        }


def _centers(d: int, j: int) -> np.ndarray:
    side = 1 << j
    idx = np.array(list(itertools.product(range(side), repeat=d)), dtype=np.int64).reshape(-1, d)
    return idx


def dyadic_tree(dimension: int, levels: int, cap: int | None = None) -> DyadicTree:
    """Flow from the Dirac at the cube center to the level-``levels`` atoms.

    Raises ResourceLimit when ``2^(d*levels)`` leaves exceed ``cap``
    (default :func:`max_atoms`).
    """
    d, k = int(dimension), int(levels)
    if d < 1 or k < 0:
        raise ValueError("need dimension >= 1 and levels >= 0")
    cap = max_atoms() if cap is None else cap
    if (1 << (d * k)) > cap:
        raise ResourceLimit(f"2^{d * k} leaves exceed cap {cap}")

    strides = [1 << (d * j) for j in range(k + 1)]
    offsets = np.concatenate([[0], np.cumsum(strides)])
    vertices = []
    edges = []
    weights = []
    level = []
    for j in range(k + 1):
        idx = _centers(d, j)
        vertices.append((2 * idx + 1) / float(1 << (j + 1)))
        if j == 0:
            continue
        side = 1 << j
        # row-major position of a multi-index on the level grid
        flat = idx @ (side ** np.arange(d - 1, -1, -1))
        parent = idx // 2
        pflat = parent @ ((side // 2) ** np.arange(d - 1, -1, -1))
        order = np.argsort(flat, kind="stable")
        tails = offsets[j - 1] + pflat[order]
        heads = offsets[j] + flat[order]
        edges.append(np.stack([tails, heads], axis=1))
        weights.append(np.full(len(heads), 2.0 ** (-d * j)))
        level.append(np.full(len(heads), j - 1))
    V = np.concatenate(vertices)
    E = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    W = np.concatenate(weights) if weights else np.zeros(0)
    net = EmbeddedNetwork(V, E)
    flow = FlowField(net, W)
    return DyadicTree(flow, np.concatenate(level) if level else np.zeros(0, dtype=np.int64))


def dyadic_tree_cost(dimension: int, alpha: float, levels: int, cap: int | None = None) -> DyadicCost:
    """Gilbert energy of :func:`dyadic_tree` and its per-level breakdown.

    Consecutive level costs differ by the factor ``2^(d(1-alpha)-1)``, so
    the series converges exactly when ``alpha > 1 - 1/d``.
    """
    alpha = check_alpha(alpha)
    tree = dyadic_tree(dimension, levels, cap)
    v = tree.flow
    terms = v.weights**alpha * v.network.lengths
    level_costs = tuple(math.fsum(terms[tree.level == j]) for j in range(levels))
    ratios = tuple(b / a for a, b in zip(level_costs, level_costs[1:]))
    return DyadicCost(
        dimension=int(dimension),
        alpha=alpha,
        levels=int(levels),
        cost=gilbert_energy(v, alpha),
        level_costs=level_costs,
        ratios=ratios,
    )
