"""Domain types for the transport solvers.

All heavy numerics operate on plain ``numpy`` arrays; these dataclasses sit at
API boundaries and validate the invariants callers rely on (nonnegativity,
marginal feasibility, row normalization, the fused-objective decomposition).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput

PROB_MASS_TOL = 1e-12
MARGINAL_TOL = 1e-9
DECOMPOSITION_TOL = 1e-9


def _as_2d(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def as_weights(u) -> np.ndarray:
    """Coerce a ProbVector or array-like to a validated 1-D weight array."""
    if isinstance(u, ProbVector):
        return u.weights
    return ProbVector(np.asarray(u, dtype=float)).weights


@dataclass(frozen=True)
class ProbVector:
    """Nonnegative weights summing to one (a discrete probability vector)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DimensionMismatch(f"weights must be a non-empty vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise NonFiniteInput("weights contain NaN/Inf")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > PROB_MASS_TOL:
            raise ValueError(f"weights must sum to 1 within {PROB_MASS_TOL}, got {w.sum()!r}")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size


def uniform_weights(n: int) -> ProbVector:
    """Uniform distribution over n points: every entry 1/n."""
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    return ProbVector(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise transport costs between two token sequences (n x m, >= 0)."""

    costs: np.ndarray

    def __post_init__(self):
        c = _as_2d(self.costs, "costs")
        if not np.all(np.isfinite(c)):
            raise NonFiniteInput("cost matrix contains NaN/Inf")
        if np.any(c < 0):
            raise ValueError("cost matrix entries must be nonnegative")
        object.__setattr__(self, "costs", c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


@dataclass(frozen=True)
class StructureMatrix:
    """Square intra-sentence structure matrix (attention mass).

    Generally asymmetric. When ``row_normalized`` is set, each row is a
    probability distribution over target positions.
    """

    values: np.ndarray
    row_normalized: bool = False

    def __post_init__(self):
        a = _as_2d(self.values, "values")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"structure matrix must be square, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteInput("structure matrix contains NaN/Inf")
        if self.row_normalized:
            if np.any(a < 0):
                raise ValueError("row-normalized structure matrix must be nonnegative")
            sums = a.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > MARGINAL_TOL):
                worst = np.abs(sums - 1.0).max()
                raise ValueError(f"rows must sum to 1 within {MARGINAL_TOL} (worst deviation {worst:.3g})")
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def as_structure(a) -> np.ndarray:
    """Coerce a StructureMatrix or array-like to a square 2-D array."""
    if isinstance(a, StructureMatrix):
        return a.values
    arr = _as_2d(a, "structure")
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"structure matrix must be square, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with prescribed marginals.

    Invariants: entries >= 0; row sums match ``row_marginal`` and column sums
    match ``col_marginal`` within 1e-9.
    """

    plan: np.ndarray
    row_marginal: ProbVector
    col_marginal: ProbVector

    def __post_init__(self):
        p = _as_2d(self.plan, "plan")
        u = self.row_marginal.weights
        v = self.col_marginal.weights
        if p.shape != (u.size, v.size):
            raise DimensionMismatch(f"plan shape {p.shape} does not match marginals ({u.size}, {v.size})")
        if np.any(p < 0):
            raise ValueError("transport plan entries must be nonnegative")
        row_err = np.abs(p.sum(axis=1) - u).max()
        col_err = np.abs(p.sum(axis=0) - v).max()
        if max(row_err, col_err) > MARGINAL_TOL:
            raise ValueError(
                f"plan marginals off by {max(row_err, col_err):.3g} (> {MARGINAL_TOL})"
            )
        object.__setattr__(self, "plan", p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.plan.shape


def as_plan(p) -> np.ndarray:
    """Coerce a TransportPlan or array-like to a 2-D array."""
    if isinstance(p, TransportPlan):
        return p.plan
    return _as_2d(p, "plan")


@dataclass(frozen=True)
class OtSolution:
    """A transport plan together with its objective value."""

    value: float
    plan: TransportPlan


@dataclass
class SolverOptions:
    """Conditional-gradient solver knobs.

    rel_tol: stop when the relative objective decrease drops below this.
    max_iter: hard iteration cap.
    initial_plan: optional feasible warm start; defaults to the product
        measure u v^T.
    """

    rel_tol: float = 1e-9
    max_iter: int = 1000
    initial_plan: np.ndarray | None = None


@dataclass(frozen=True)
class FgwResult:
    """Stationary point of the fused transport objective.

    ``distance`` decomposes exactly as
    ``(1 - lam) * wmd_component + lam * k * smd_component``; both components
    are the linear and quadratic transport costs evaluated at ``plan``.
    ``structure_fallback`` marks results where degenerate structure forced a
    fall-back to the pure linear problem (lam reported as 0).
    """

    distance: float
    plan: TransportPlan
    wmd_component: float
    smd_component: float
    k: float
    lam: float
    iterations: int
    converged: bool
    structure_fallback: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.distance < -DECOMPOSITION_TOL:
            raise ValueError(f"distance must be nonnegative, got {self.distance}")
        recomposed = (1.0 - self.lam) * self.wmd_component + self.lam * self.k * self.smd_component
        if abs(self.distance - recomposed) > DECOMPOSITION_TOL * max(1.0, abs(self.distance)):
            raise ValueError(
                f"decomposition identity violated: {self.distance} != {recomposed}"
            )
