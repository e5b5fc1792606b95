"""Generic exact optimal-transport and fused Gromov-Wasserstein solvers."""

from .fgw import gw_gradient, gw_objective, line_search, solve_fgw
from .simplex import solve_exact_ot
from .types import (
    CostMatrix,
    FgwResult,
    OtSolution,
    ProbVector,
    SolverOptions,
    StructureMatrix,
    TransportPlan,
    uniform_weights,
)

__all__ = [
    "CostMatrix",
    "FgwResult",
    "OtSolution",
    "ProbVector",
    "SolverOptions",
    "StructureMatrix",
    "TransportPlan",
    "gw_gradient",
    "gw_objective",
    "line_search",
    "solve_exact_ot",
    "solve_fgw",
    "uniform_weights",
]
