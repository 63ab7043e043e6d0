"""Discrete minimization of the Gilbert energy over trees."""

from .dyadic import DyadicCost, dyadic_tree, dyadic_tree_cost
from .relax import RelaxResult, relax_geometry, topology_cost
from .solver import SolveConfig, SolveResult, solve_discrete
from .topology import (
    Topology,
    TreeWeights,
    enumerate_topologies,
    terminals_from_measures,
    tree_shapes,
    tree_weights,
)

__all__ = [
    "DyadicCost",
    "RelaxResult",
    "SolveConfig",
    "SolveResult",
    "Topology",
    "TreeWeights",
    "dyadic_tree",
    "dyadic_tree_cost",
    "enumerate_topologies",
    "relax_geometry",
    "solve_discrete",
    "terminals_from_measures",
    "topology_cost",
    "tree_shapes",
    "tree_weights",
]
