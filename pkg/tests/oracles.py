"""Independent reference computations used to check the optimizers."""

from __future__ import annotations

import itertools
import math

import numpy as np


def y_cost(x: float, alpha: float) -> float:
    """Energy of unit mass from (0,0) split at (x,0) into halves at (1,+-1)."""
    return abs(x) + 2.0 * 0.5**alpha * math.hypot(1.0 - x, 1.0)


def nested_grid_min(f, lo: float, hi: float, resolution: float = 1e-6, points: int = 201):
    """Minimize a unimodal ``f`` on [lo, hi] by repeated grid refinement.

    Each pass samples ``points`` abscissae and shrinks the window to the two
    cells around the best one, until the grid spacing is below
    ``resolution``.
    """
    while True:
        xs = np.linspace(lo, hi, points)
        vals = [f(x) for x in xs]
        k = int(np.argmin(vals))
        step = xs[1] - xs[0]
        if step <= resolution:
            return float(xs[k]), float(vals[k])
        lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, points - 1)]


def branch_angle(x: float) -> float:
    """Full angle in degrees between the two arms of the Y branched at (x, 0)."""
    return math.degrees(2.0 * math.atan2(1.0, 1.0 - x))


def monge_cost(sources, targets) -> float:
    """Cheapest assignment between equal-size, equal-mass point lists,
    scaled by the common atom mass, by trying every permutation."""
    k = len(sources)
    best = math.inf
    for perm in itertools.permutations(range(k)):
        c = sum(math.dist(sources[i], targets[j]) for i, j in enumerate(perm))
        best = min(best, c)
    return best / k
