"""Exact linear optimal transport via network simplex.

Solves  min_P <C, P>  over the transportation polytope
{P >= 0 : P 1 = u, P^T 1 = v}  to a vertex (basic) solution, so the returned
plan has at most n + m - 1 strictly positive entries.

The pivoting rule is Bland's lowest-index rule for both the entering and the
leaving arc, which makes the solver deterministic and immune to cycling under
degeneracy (uniform marginals are maximally degenerate).  Costs of any sign
are accepted: the conditional-gradient solver feeds signed gradients through
this routine as its linear minimization oracle.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput
from .types import OtSolution, ProbVector, TransportPlan, as_weights

# Pivots are cheap; this cap only guards against float-noise stalls.
_MAX_PIVOT_FACTOR = 200


def _northwest_corner(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Initial basic feasible solution: staircase of exactly n + m - 1 cells."""
    n, m = u.size, v.size
    plan = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    u_rem = u.copy()
    v_rem = v.copy()
    i = j = 0
    for _ in range(n + m - 1):
        basis.append((i, j))
        t = min(u_rem[i], v_rem[j])
        plan[i, j] = t
        u_rem[i] -= t
        v_rem[j] -= t
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif u_rem[i] <= v_rem[j]:
            i += 1
        else:
            j += 1
    return plan, basis


def _compute_duals(
    cost: np.ndarray,
    row_adj: list[list[int]],
    col_adj: list[list[int]],
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate dual potentials over the spanning tree, rooted at row 0."""
    n, m = cost.shape
    pot_row = np.empty(n)
    pot_col = np.empty(m)
    seen_row = np.zeros(n, dtype=bool)
    seen_col = np.zeros(m, dtype=bool)
    pot_row[0] = 0.0
    seen_row[0] = True
    stack: list[tuple[bool, int]] = [(True, 0)]
    while stack:
        is_row, k = stack.pop()
        if is_row:
            for j in row_adj[k]:
                if not seen_col[j]:
                    pot_col[j] = cost[k, j] - pot_row[k]
                    seen_col[j] = True
                    stack.append((False, j))
        else:
            for i in col_adj[k]:
                if not seen_row[i]:
                    pot_row[i] = cost[i, k] - pot_col[k]
                    seen_row[i] = True
                    stack.append((True, i))
    return pot_row, pot_col


def _tree_path(
    start_row: int,
    end_col: int,
    row_adj: list[list[int]],
    col_adj: list[list[int]],
) -> list[tuple[int, int]]:
    """Basic cells along the unique tree path from row node to column node."""
    n = len(row_adj)
    m = len(col_adj)
    # parent[node] = (parent_node, edge); rows are 0..n-1, cols are n..n+m-1
    parent: dict[int, tuple[int, tuple[int, int]]] = {}
    seen = {start_row}
    stack = [start_row]
    target = n + end_col
    while stack:
        node = stack.pop()
        if node == target:
            break
        if node < n:
            for j in row_adj[node]:
                nxt = n + j
                if nxt not in seen:
                    seen.add(nxt)
                    parent[nxt] = (node, (node, j))
                    stack.append(nxt)
        else:
            for i in col_adj[node - n]:
                if i not in seen:
                    seen.add(i)
                    parent[i] = (node, (i, node - n))
                    stack.append(i)
    path: list[tuple[int, int]] = []
    node = target
    while node != start_row:
        par, edge = parent[node]
        path.append(edge)
        node = par
    path.reverse()  # now ordered from start_row to end_col
    return path


def _network_simplex(
    cost: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    warm_start: tuple[np.ndarray, list[tuple[int, int]]] | None = None,
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Returns (optimal plan, optimal basis).

    ``warm_start`` may carry the (plan, basis) vertex of a previous solve with
    the same marginals; repeated solves with slowly changing costs then take
    only a handful of pivots.
    """
    n, m = cost.shape
    if warm_start is not None:
        plan, basis = warm_start[0].copy(), list(warm_start[1])
    else:
        plan, basis = _northwest_corner(u, v)
    basis_set = set(basis)
    row_adj: list[list[int]] = [[] for _ in range(n)]
    col_adj: list[list[int]] = [[] for _ in range(m)]
    for i, j in basis:
        row_adj[i].append(j)
        col_adj[j].append(i)

    scale = max(1.0, float(np.abs(cost).max()))
    tol = 1e-11 * scale
    max_pivots = _MAX_PIVOT_FACTOR * (n + m) * max(n, m)

    for _ in range(max_pivots):
        pot_row, pot_col = _compute_duals(cost, row_adj, col_adj)
        reduced = cost - pot_row[:, None] - pot_col[None, :]
        negative = (reduced < -tol).ravel()
        if not negative.any():
            return plan, sorted(basis_set)
        # Bland: first violating cell in row-major order enters the basis.
        flat = int(np.argmax(negative))
        ei, ej = divmod(flat, m)

        path = _tree_path(ei, ej, row_adj, col_adj)
        # Cycle = entering cell (+) then path edges with alternating signs,
        # starting with - on the edge sharing row ei.
        minus = path[0::2]
        plus = path[1::2]

        # Exact min keeps every remaining cell nonnegative after the update;
        # lowest-index tie-break is Bland's anti-cycling rule.
        theta = min(plan[cell] for cell in minus)
        leaving = min(cell for cell in minus if plan[cell] == theta)

        plan[ei, ej] += theta
        for cell in plus:
            plan[cell] += theta
        for cell in minus:
            plan[cell] -= theta
        plan[leaving] = 0.0  # exact zero; cancels float residue

        basis_set.remove(leaving)
        basis_set.add((ei, ej))
        row_adj[leaving[0]].remove(leaving[1])
        col_adj[leaving[1]].remove(leaving[0])
        row_adj[ei].append(ej)
        col_adj[ej].append(ei)

    raise RuntimeError("network simplex failed to terminate (pivot cap reached)")


def solve_exact_ot(cost, u, v) -> OtSolution:
    """Exact optimal transport plan and objective for a dense cost matrix.

    Parameters
    ----------
    cost : (n, m) array-like or CostMatrix
        Per-unit transport costs.  Any finite values are accepted.
    u, v : length-n / length-m array-like or ProbVector
        Row and column marginals.

    Returns
    -------
    OtSolution
        ``value`` is the global minimum of the linear program; ``plan`` is a
        vertex of the transportation polytope.
    """
    c = np.asarray(getattr(cost, "costs", cost), dtype=float)
    if c.ndim != 2:
        raise DimensionMismatch(f"cost must be 2-D, got shape {c.shape}")
    uw = as_weights(u)
    vw = as_weights(v)
    if c.shape != (uw.size, vw.size):
        raise DimensionMismatch(
            f"cost shape {c.shape} does not match marginals ({uw.size}, {vw.size})"
        )
    if not np.all(np.isfinite(c)):
        raise NonFiniteInput("cost matrix contains NaN/Inf")

    plan, _ = _network_simplex(c, uw, vw)
    value = float(np.sum(c * plan))
    transport = TransportPlan(plan, ProbVector(uw), ProbVector(vw))
    return OtSolution(value=value, plan=transport)
