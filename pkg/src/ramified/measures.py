"""Finite atomic measures on R^d, used as source and target marginals."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, NegativeMass, ResourceLimit, TotalMassNotOne

DEFAULT_MAX_ATOMS = 1 << 20
PROBABILITY_TOL = 1e-12


def max_atoms() -> int:
    """Instance-size cap, read from ``RAMIFIED_MAX_ATOMS`` when set."""
    raw = os.environ.get("RAMIFIED_MAX_ATOMS")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ATOMS
    return int(raw)


def _key(point: Sequence[float]) -> tuple[float, ...]:
    # + 0.0 folds -0.0 onto 0.0 so that equal points share one key
    return tuple(float(x) + 0.0 for x in point)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely supported nonnegative measure ``sum_i m_i delta_{x_i}``.

    Atoms are stored sorted lexicographically by coordinates with distinct
    points and strictly positive masses. Build instances with
    :func:`make_measure` rather than calling the constructor directly.
    """

    dim: int
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)
        self.masses.setflags(write=False)

    def __len__(self) -> int:
        return len(self.masses)

    def __iter__(self) -> Iterator[tuple[tuple[float, ...], float]]:
        for p, m in zip(self.points, self.masses):
            yield tuple(float(x) for x in p), float(m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.masses, other.masses)
        )

    def __repr__(self) -> str:
        atoms = ", ".join(f"{p}: {m:g}" for p, m in self)
        return f"AtomicMeasure(dim={self.dim}, {{{atoms}}})"

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    @property
    def is_empty(self) -> bool:
        return len(self.masses) == 0

    def mass_at(self, point: Sequence[float]) -> float:
        key = _key(point)
        for p, m in self:
            if p == key:
                return m
        return 0.0

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [{"p": list(p), "m": m} for p, m in self],
        }

    @classmethod
    def from_dict(cls, data: dict, require_probability: bool = False) -> "AtomicMeasure":
        atoms = [(a["p"], a["m"]) for a in data["atoms"]]
        return make_measure(atoms, require_probability=require_probability, dim=data["dim"])


def make_measure(
    atoms: Iterable[tuple[Sequence[float], float]],
    require_probability: bool = False,
    dim: int | None = None,
) -> AtomicMeasure:
    """Validate atoms and merge those sitting at identical points.

    Parameters
    ----------
    atoms : iterable of (point, mass)
        Coordinates are compared exactly; no snapping is performed.
    require_probability : bool
        Reject inputs whose total mass differs from 1 by more than 1e-12.
    dim : int, optional
        Ambient dimension. Required when ``atoms`` is empty.

    Returns
    -------
    AtomicMeasure
        Zero-mass atoms are dropped. Merged masses are summed with
        ``math.fsum`` so the result does not depend on input order.
    """
    groups: dict[tuple[float, ...], list[float]] = {}
    for point, mass in atoms:
        key = _key(point)
        if dim is None:
            dim = len(key)
        if len(key) != dim:
            raise DimensionMismatch(f"point {key} is not in R^{dim}")
        if not all(math.isfinite(x) for x in key):
            raise ValueError(f"non-finite coordinate in {key}")
        mass = float(mass)
        if not mass >= 0.0 or not math.isfinite(mass):
            raise NegativeMass(f"mass {mass!r} at {key}")
        groups.setdefault(key, []).append(mass)
    if dim is None:
        raise DimensionMismatch("cannot infer dimension of an empty measure")

    merged = sorted((k, math.fsum(v)) for k, v in groups.items())
    merged = [(k, m) for k, m in merged if m > 0.0]
    points = np.array([k for k, _ in merged], dtype=float).reshape(len(merged), dim)
    masses = np.array([m for _, m in merged], dtype=float)
    measure = AtomicMeasure(dim, points, masses)

    if require_probability and abs(measure.total_mass - 1.0) > PROBABILITY_TOL:
        raise TotalMassNotOne(f"total mass is {measure.total_mass!r}")
    return measure


def dirac(point: Sequence[float], mass: float = 1.0) -> AtomicMeasure:
    return make_measure([(point, mass)])


def dyadic_cube_measure(dimension: int, level: int, cap: int | None = None) -> AtomicMeasure:
    """Uniform measure on [0,1]^d discretized at dyadic scale ``2^-level``.

    One atom of mass ``2^(-d*level)`` sits at the center of each dyadic
    subcube. Raises ResourceLimit if ``2^(d*level)`` exceeds ``cap``
    (default: :func:`max_atoms`).
    """
    if dimension < 1 or level < 0:
        raise ValueError("need dimension >= 1 and level >= 0")
    cap = max_atoms() if cap is None else cap
    count = 1 << (dimension * level)
    if count > cap:
        raise ResourceLimit(f"2^{dimension * level} = {count} atoms exceeds cap {cap}")
    side = 1 << level
    mass = 2.0 ** (-dimension * level)
    centers = [(2 * i + 1) / (2 * side) for i in range(side)]
    atoms = ((p, mass) for p in itertools.product(centers, repeat=dimension))
    return make_measure(atoms, dim=dimension)
