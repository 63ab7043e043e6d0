"""Branched transport on atomic measures.

Eulerian flows on embedded networks, Lagrangian irrigation plans, the maps
between them, and a small solver for minimum Gilbert energy networks.
"""

from .errors import RamifiedError
from .eulerian import (
    EmbeddedNetwork,
    FlowField,
    cancel_cycles,
    check_kirchhoff,
    divergence,
    find_cycle,
    gilbert_energy,
    make_flow,
)
from .lagrangian import (
    IrrigationPlan,
    full_energy,
    gilbert_energy_plan,
    irrigation_cost,
    is_simple,
    make_plan,
    marginals,
    multiplicities,
    simple_replacement,
)
from .measures import AtomicMeasure, dirac, dyadic_cube_measure, make_measure
from .transform import flow_to_plan, plan_to_flow, verify_equivalence

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "EmbeddedNetwork",
    "FlowField",
    "IrrigationPlan",
    "RamifiedError",
    "cancel_cycles",
    "check_kirchhoff",
    "dirac",
    "divergence",
    "dyadic_cube_measure",
    "find_cycle",
    "flow_to_plan",
    "full_energy",
    "gilbert_energy",
    "gilbert_energy_plan",
    "irrigation_cost",
    "is_simple",
    "make_flow",
    "make_measure",
    "make_plan",
    "marginals",
    "multiplicities",
    "plan_to_flow",
    "simple_replacement",
    "verify_equivalence",
]
