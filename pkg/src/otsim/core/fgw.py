"""Gromov-Wasserstein objective and the fused conditional-gradient solver.

The structure transport cost between square matrices A (n x n) and B (m x m)
under a coupling P is

    E(P) = sum_{i,i',j,j'} (A[i,i'] - B[j,j'])^2 P[i,j] P[i',j'].

Because the squared terms factor through the marginals of P, E(P) collapses to

    E(P) = r (A*A) r + c (B*B) c - 2 <P, A P B^T>,

with r, c the row/column sums of P.  This identity holds for arbitrary P (not
just feasible couplings), costs O(n^2 m + n m^2), and makes the gradient exact
for asymmetric structure matrices:

    grad E = const - 2 (A P B^T + A^T P B),
    const[i,j] = sum_{i'} (A[i,i']^2 + A[i',i]^2) r[i']
               + sum_{j'} (B[j,j']^2 + B[j',j]^2) c[j'].

The fused objective  f(P) = (1-lam) <C, P> + lam * k * E(P)  is minimized by
Frank-Wolfe: linearize, solve the exact LP, then take the closed-form step of
the quadratic restricted to the segment.  E is non-convex in general, so the
solver returns a stationary point, not a certified global optimum.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput
from .simplex import _network_simplex
from .types import (
    FgwResult,
    ProbVector,
    SolverOptions,
    TransportPlan,
    as_plan,
    as_structure,
    as_weights,
)


def _check_pair(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> None:
    if p.shape != (a.shape[0], b.shape[0]):
        raise DimensionMismatch(
            f"plan shape {p.shape} does not match structures ({a.shape[0]}, {b.shape[0]})"
        )


def gw_objective(A, B, plan) -> float:
    """Structure transport cost E(P) between A and B under the given plan.

    Exactly equals the quadruple sum for any nonnegative matrix ``plan``;
    marginals are read off the plan itself.
    """
    a = as_structure(A)
    b = as_structure(B)
    p = as_plan(plan)
    _check_pair(a, b, p)
    r = p.sum(axis=1)
    c = p.sum(axis=0)
    quad = r @ (a * a) @ r + c @ (b * b) @ c
    cross = float(np.sum(p * (a @ p @ b.T)))
    return float(quad - 2.0 * cross)


def gw_gradient(A, B, plan) -> np.ndarray:
    """Exact gradient of ``gw_objective`` with respect to the plan.

    Keeps both A and A^T terms: attention matrices are asymmetric, so the two
    cross products do not coincide.
    """
    a = as_structure(A)
    b = as_structure(B)
    p = as_plan(plan)
    _check_pair(a, b, p)
    r = p.sum(axis=1)
    c = p.sum(axis=0)
    sa = a * a
    sb = b * b
    const_rows = (sa + sa.T) @ r  # length n
    const_cols = (sb + sb.T) @ c  # length m
    return const_rows[:, None] + const_cols[None, :] - 2.0 * (a @ p @ b.T + a.T @ p @ b)


def line_search(direction_delta, C, A, B, P, lam: float, k: float) -> float:
    """Exact minimizer over tau in [0, 1] of the fused objective along P + tau*Delta.

    The restriction is the quadratic  a*tau^2 + b*tau + f(P)  with
    a = -2*lam*k*<Delta, A Delta B^T> and
    b = (1-lam)<C, Delta> - 2*lam*k*(<Delta, A P B^T> + <P, A Delta B^T>).
    Concave or linear restrictions (a <= 0) pick the cheaper endpoint; the
    doubly degenerate a = b = 0 case returns 0.
    """
    d = np.asarray(direction_delta, dtype=float)
    c = np.asarray(getattr(C, "costs", C), dtype=float)
    a_mat = as_structure(A)
    b_mat = as_structure(B)
    p = as_plan(P)

    gw_weight = lam * k
    lin = (1.0 - lam) * float(np.sum(c * d))
    if gw_weight == 0.0:
        quad_a = 0.0
        quad_b = lin
    else:
        adb = a_mat @ d @ b_mat.T
        quad_a = -2.0 * gw_weight * float(np.sum(d * adb))
        quad_b = lin - 2.0 * gw_weight * (
            float(np.sum(d * (a_mat @ p @ b_mat.T))) + float(np.sum(p * adb))
        )

    if quad_a > 0.0:
        return float(min(1.0, max(0.0, -quad_b / (2.0 * quad_a))))
    # a <= 0: endpoint rule; f(1) - f(0) = a + b.
    return 1.0 if quad_a + quad_b < 0.0 else 0.0


def solve_fgw(cost, A, B, u, v, lam: float, k: float, opts: SolverOptions | None = None) -> FgwResult:
    """Minimize the fused linear + structure transport objective by Frank-Wolfe.

    Parameters
    ----------
    cost : (n, m) array-like or CostMatrix
        Linear transport costs.
    A, B : square array-like or StructureMatrix
        Intra-sentence structure matrices (may be asymmetric).
    u, v : array-like or ProbVector
        Marginals.
    lam : float in [0, 1]
        Mixing ratio between the linear term (lam=0) and the structure term
        (lam=1).
    k : float >= 0
        Scale applied to the structure term.
    opts : SolverOptions, optional
        Tolerance, iteration cap, and warm start.

    Returns
    -------
    FgwResult
        Stationary point with the objective split into its linear and
        structure components.  The objective sequence is non-increasing.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    if not (np.isfinite(k) and k >= 0.0):
        raise ValueError(f"k must be finite and nonnegative, got {k}")
    opts = opts or SolverOptions()

    c = np.asarray(getattr(cost, "costs", cost), dtype=float)
    a = as_structure(A)
    b = as_structure(B)
    uw = as_weights(u)
    vw = as_weights(v)
    n, m = uw.size, vw.size
    if c.shape != (n, m):
        raise DimensionMismatch(f"cost shape {c.shape} does not match marginals ({n}, {m})")
    if a.shape[0] != n or b.shape[0] != m:
        raise DimensionMismatch(
            f"structure shapes {a.shape}, {b.shape} do not match marginals ({n}, {m})"
        )
    for name, arr in (("cost", c), ("A", a), ("B", b)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput(f"{name} contains NaN/Inf")

    if opts.initial_plan is not None:
        p = np.array(opts.initial_plan, dtype=float)
        if p.shape != (n, m):
            raise DimensionMismatch(f"initial plan shape {p.shape} != ({n}, {m})")
        if np.any(p < 0) or max(
            np.abs(p.sum(axis=1) - uw).max(), np.abs(p.sum(axis=0) - vw).max()
        ) > 1e-9:
            raise ValueError("initial plan is not a feasible coupling for (u, v)")
    else:
        p = np.outer(uw, vw)

    gw_weight = lam * k

    def objective(plan: np.ndarray) -> float:
        val = (1.0 - lam) * float(np.sum(c * plan))
        if gw_weight != 0.0:
            val += gw_weight * gw_objective(a, b, plan)
        return val

    f_cur = objective(p)
    iterations = 0
    converged = False
    lp_vertex = None  # warm start: marginals are fixed across iterations
    for iterations in range(1, opts.max_iter + 1):
        grad = (1.0 - lam) * c
        if gw_weight != 0.0:
            grad = grad + gw_weight * gw_gradient(a, b, p)
        lp_vertex = _network_simplex(grad, uw, vw, warm_start=lp_vertex)
        q = lp_vertex[0]
        delta = q - p
        tau = line_search(delta, c, a, b, p, lam, k)
        if tau == 0.0:
            converged = True  # stationary along the Frank-Wolfe direction
            break
        p_next = p + tau * delta
        f_next = objective(p_next)
        if f_next > f_cur:
            converged = True  # float-noise ascent; the exact step cannot increase f
            break
        p = p_next
        if f_cur - f_next <= opts.rel_tol * max(abs(f_cur), 1e-16):
            f_cur = f_next
            converged = True
            break
        f_cur = f_next

    np.clip(p, 0.0, None, out=p)  # line-search arithmetic can leave -1e-17 residue
    plan = TransportPlan(p, ProbVector(uw), ProbVector(vw))
    wmd_component = float(np.sum(c * p))
    smd_component = gw_objective(a, b, p)
    distance = (1.0 - lam) * wmd_component + lam * k * smd_component
    return FgwResult(
        distance=max(distance, 0.0),
        plan=plan,
        wmd_component=wmd_component,
        smd_component=smd_component,
        k=k,
        lam=lam,
        iterations=iterations,
        converged=converged,
    )
