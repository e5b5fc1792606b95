"""Sentence similarity from optimal transport over embeddings and attention structure."""

from .core import (
    CostMatrix,
    FgwResult,
    OtSolution,
    ProbVector,
    SolverOptions,
    StructureMatrix,
    TransportPlan,
    gw_gradient,
    gw_objective,
    line_search,
    solve_exact_ot,
    solve_fgw,
    uniform_weights,
)
from .measures import (
    CostKind,
    SentenceBundle,
    WeightScheme,
    bow_similarity,
    build_cost,
    build_weights,
    normalization_factor,
    sent_emb_similarity,
    smd,
    wmd,
    wsmd,
)
from .whitening import WhiteningTransform, apply_whitening, fit_whitening

__version__ = "0.1.0"

__all__ = [
    "CostKind",
    "CostMatrix",
    "FgwResult",
    "OtSolution",
    "ProbVector",
    "SentenceBundle",
    "SolverOptions",
    "StructureMatrix",
    "TransportPlan",
    "WeightScheme",
    "WhiteningTransform",
    "apply_whitening",
    "bow_similarity",
    "build_cost",
    "build_weights",
    "fit_whitening",
    "gw_gradient",
    "gw_objective",
    "line_search",
    "normalization_factor",
    "sent_emb_similarity",
    "smd",
    "solve_exact_ot",
    "solve_fgw",
    "uniform_weights",
    "wmd",
    "wsmd",
]
