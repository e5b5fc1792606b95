"""Independent reference implementations used to check the solvers.

Everything here deliberately avoids the code paths under test: brute-force
enumeration, quadruple loops, scipy's LP, central finite differences.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def lp_transport_value(cost: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """Exact transport LP objective via scipy (HiGHS)."""
    n, m = cost.shape
    a_eq = np.zeros((n + m, n * m))
    b_eq = np.concatenate([u, v])
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def permutation_min(cost: np.ndarray) -> float:
    """(1/n) * min over permutations of the assignment cost (uniform marginals)."""
    n = cost.shape[0]
    assert cost.shape == (n, n)
    best = min(sum(cost[i, sigma[i]] for i in range(n)) for sigma in itertools.permutations(range(n)))
    return best / n


def permutation_plan(sigma, n: int) -> np.ndarray:
    plan = np.zeros((n, n))
    for i, j in enumerate(sigma):
        plan[i, j] = 1.0 / n
    return plan


def gw_quadruple_loop(a: np.ndarray, b: np.ndarray, plan: np.ndarray) -> float:
    n, m = plan.shape
    total = 0.0
    for i in range(n):
        for i2 in range(n):
            for j in range(m):
                for j2 in range(m):
                    total += (a[i, i2] - b[j, j2]) ** 2 * plan[i, j] * plan[i2, j2]
    return total


def fused_objective_loop(
    cost: np.ndarray, a: np.ndarray, b: np.ndarray, plan: np.ndarray, lam: float, k: float
) -> float:
    return (1.0 - lam) * float(np.sum(cost * plan)) + lam * k * gw_quadruple_loop(a, b, plan)


def central_difference(f, plan: np.ndarray, i: int, j: int, step: float = 1e-6) -> float:
    plus = plan.copy()
    minus = plan.copy()
    plus[i, j] += step
    minus[i, j] -= step
    return (f(plus) - f(minus)) / (2.0 * step)


def auc_pair_counting(distances: np.ndarray, labels: np.ndarray) -> float:
    """O(n^2) comparison count: P(d_pos < d_neg) + 0.5 P(equal)."""
    pos = distances[labels == 1]
    neg = distances[labels == 0]
    wins = 0.0
    for dp in pos:
        for dn in neg:
            if dp < dn:
                wins += 1.0
            elif dp == dn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def rank_then_pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman oracle: midranks by explicit counting, then Pearson."""

    def midrank(z: np.ndarray) -> np.ndarray:
        out = np.empty(z.size)
        for idx, val in enumerate(z):
            less = float(np.sum(z < val))
            equal = float(np.sum(z == val))
            out[idx] = less + (equal + 1.0) / 2.0
        return out

    rx = midrank(x)
    ry = midrank(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def random_marginal(rng: np.random.Generator, n: int, floor: float = 0.05) -> np.ndarray:
    w = rng.random(n) + floor
    return w / w.sum()


def random_row_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.random((n, n)) + 1e-3
    return a / a.sum(axis=1, keepdims=True)


def random_feasible_plan(rng: np.random.Generator, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """A random interior coupling: mixture of the product plan and a random
    doubly-rescaled matrix (Sinkhorn-style projection, used only as an oracle
    input, never as a solver)."""
    raw = rng.random((u.size, v.size)) + 0.1
    for _ in range(200):
        raw *= (u / raw.sum(axis=1))[:, None]
        raw *= (v / raw.sum(axis=0))[None, :]
    return raw
