"""Fused solver contracts: line search, degenerate mixing ratios, decomposition,
monotone descent, and local-optimum semantics."""

import itertools

import numpy as np
import pytest

from otsim import (
    SolverOptions,
    gw_objective,
    line_search,
    solve_exact_ot,
    solve_fgw,
)
from otsim.errors import DimensionMismatch, NonFiniteInput

from oracles import (
    fused_objective_loop,
    permutation_plan,
    random_feasible_plan,
    random_marginal,
    random_row_stochastic,
)


def _random_instance(rng, n, m):
    cost = rng.random((n, m)) * 4
    a = random_row_stochastic(rng, n)
    b = random_row_stochastic(rng, m)
    u = random_marginal(rng, n)
    v = random_marginal(rng, m)
    return cost, a, b, u, v


def _search_coefficients(delta, cost, a, b, plan, lam, k):
    """Recompute the restriction coefficients from the definition."""
    adb = a @ delta @ b.T
    qa = -2.0 * lam * k * float(np.sum(delta * adb))
    qb = (1.0 - lam) * float(np.sum(cost * delta)) - 2.0 * lam * k * (
        float(np.sum(delta * (a @ plan @ b.T))) + float(np.sum(plan * adb))
    )
    return qa, qb


class TestLineSearch:
    def _instances(self, rng, count=200):
        for _ in range(count):
            n, m = rng.integers(2, 5, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            p = random_feasible_plan(rng, u, v)
            q = solve_exact_ot(rng.normal(size=(n, m)), u, v).plan.plan
            yield cost, a, b, p, q - p

    def _convex_case(self, rng, tau_target):
        """Build an instance whose restriction is convex with minimizer at
        tau_target, by tilting the linear term along the direction."""
        lam, k = 0.5, 2.0
        while True:
            n, m = rng.integers(2, 5, size=2)
            cost0, a, b, u, v = _random_instance(rng, n, m)
            p = random_feasible_plan(rng, u, v)
            q = solve_exact_ot(rng.normal(size=(n, m)), u, v).plan.plan
            delta = q - p
            qa, _ = _search_coefficients(delta, cost0, a, b, p, lam, k)
            if qa <= 1e-8 or np.sum(delta * delta) < 1e-12:
                continue
            _, qb0 = _search_coefficients(delta, np.zeros((n, m)), a, b, p, lam, k)
            alpha = (-2.0 * qa * tau_target - qb0) / ((1 - lam) * float(np.sum(delta * delta)))
            cost = alpha * delta  # signed linear term positions the minimizer
            return cost, a, b, p, delta, lam, k, qa

    def test_interior_minimizer_when_convex(self, rng):
        for _ in range(10):
            tau_target = float(rng.uniform(0.05, 0.95))
            cost, a, b, p, delta, lam, k, _ = self._convex_case(rng, tau_target)
            assert line_search(delta, cost, a, b, p, lam, k) == pytest.approx(tau_target, abs=1e-9)

    def test_clamps_to_upper_endpoint(self, rng):
        for _ in range(5):
            tau_target = float(rng.uniform(1.5, 4.0))
            cost, a, b, p, delta, lam, k, _ = self._convex_case(rng, tau_target)
            assert line_search(delta, cost, a, b, p, lam, k) == 1.0

    def test_clamps_to_lower_endpoint(self, rng):
        cost, a, b, p, delta, lam, k, _ = self._convex_case(rng, -0.5)
        assert line_search(delta, cost, a, b, p, lam, k) == 0.0

    def test_doubly_degenerate_returns_zero(self):
        p = np.full((2, 2), 0.25)
        assert line_search(np.zeros((2, 2)), np.ones((2, 2)), np.eye(2), np.eye(2), p, 0.5, 1.0) == 0.0

    def test_beats_dense_tau_grid(self, rng):
        for trial, (cost, a, b, p, delta) in enumerate(self._instances(rng, count=10)):
            lam, k = 0.5, 3.0
            tau_star = line_search(delta, cost, a, b, p, lam, k)
            f_star = fused_objective_loop(cost, a, b, p + tau_star * delta, lam, k)
            for tau in np.linspace(0.0, 1.0, 100):
                f_tau = fused_objective_loop(cost, a, b, p + tau * delta, lam, k)
                assert f_star <= f_tau + 1e-12


class TestSolveFgw:
    def test_lambda_zero_is_plain_transport(self, rng):
        for _ in range(10):
            n, m = rng.integers(2, 6, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            res = solve_fgw(cost, a, b, u, v, lam=0.0, k=5.0)
            assert res.distance == pytest.approx(solve_exact_ot(cost, u, v).value, abs=1e-9)
            # structure cost still reported at that plan
            assert res.smd_component == pytest.approx(gw_objective(a, b, res.plan.plan), abs=1e-12)

    def test_lambda_one_ignores_cost_matrix(self, rng):
        for _ in range(10):
            n, m = rng.integers(2, 6, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            res = solve_fgw(cost, a, b, u, v, lam=1.0, k=2.5)
            assert res.distance == pytest.approx(2.5 * gw_objective(a, b, res.plan.plan), abs=1e-9)
            other = solve_fgw(cost * 100, a, b, u, v, lam=1.0, k=2.5)
            assert other.distance == pytest.approx(res.distance, abs=1e-12)

    def test_decomposition_identity(self, rng):
        for _ in range(10):
            n, m = rng.integers(2, 6, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            lam = float(rng.random())
            res = solve_fgw(cost, a, b, u, v, lam=lam, k=3.0)
            recomposed = (1 - lam) * res.wmd_component + lam * 3.0 * res.smd_component
            assert res.distance == pytest.approx(recomposed, abs=1e-9)

    def test_components_recomputable_with_scalar_loops(self, rng):
        cost, a, b, u, v = _random_instance(rng, 3, 4)
        res = solve_fgw(cost, a, b, u, v, lam=0.4, k=2.0)
        p = res.plan.plan
        assert res.wmd_component == pytest.approx(float(np.sum(cost * p)), abs=1e-12)
        assert res.distance == pytest.approx(fused_objective_loop(cost, a, b, p, 0.4, 2.0), abs=1e-10)

    def test_objective_monotone_under_truncation(self, rng):
        cost, a, b, u, v = _random_instance(rng, 4, 4)
        values = []
        for cap in range(1, 25):
            res = solve_fgw(cost, a, b, u, v, lam=0.5, k=4.0, opts=SolverOptions(max_iter=cap))
            values.append(res.distance)
        initial = fused_objective_loop(cost, a, b, np.outer(u, v), 0.5, 4.0)
        assert values[0] <= initial + 1e-12
        for earlier, later in zip(values, values[1:]):
            assert later <= earlier + 1e-12

    def test_feasible_plan_returned(self, rng):
        for _ in range(10):
            n, m = rng.integers(2, 7, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            res = solve_fgw(cost, a, b, u, v, lam=0.7, k=1.0)
            p = res.plan.plan
            assert np.all(p >= 0)
            assert np.abs(p.sum(axis=1) - u).max() < 1e-9
            assert np.abs(p.sum(axis=0) - v).max() < 1e-9

    def test_multi_restart_beats_every_permutation_seed(self, rng):
        # Local-optimum semantics: the best restart is at least as good as the
        # objective at each permutation vertex, and never worse than the
        # product-measure start.
        n = 3
        cost = rng.random((n, n)) * 4
        a = random_row_stochastic(rng, n)
        b = random_row_stochastic(rng, n)
        u = np.full(n, 1 / n)
        lam, k = 0.5, 2.0
        runs = [solve_fgw(cost, a, b, u, u, lam=lam, k=k)]
        for sigma in itertools.permutations(range(n)):
            seed = permutation_plan(sigma, n)
            runs.append(solve_fgw(cost, a, b, u, u, lam=lam, k=k, opts=SolverOptions(initial_plan=seed)))
        best = min(run.distance for run in runs)
        product_objective = fused_objective_loop(cost, a, b, np.outer(u, u), lam, k)
        assert best <= product_objective + 1e-9
        for sigma in itertools.permutations(range(n)):
            assert best <= fused_objective_loop(cost, a, b, permutation_plan(sigma, n), lam, k) + 1e-9

    def test_swap_symmetry(self, rng):
        for _ in range(8):
            n, m = rng.integers(2, 6, size=2)
            cost, a, b, u, v = _random_instance(rng, n, m)
            lam = 0.5
            fwd = solve_fgw(cost, a, b, u, v, lam=lam, k=2.0)
            rev = solve_fgw(cost.T, b, a, v, u, lam=lam, k=2.0)
            assert rev.distance == pytest.approx(fwd.distance, abs=1e-9)

    def test_infeasible_warm_start_rejected(self, rng):
        cost, a, b, u, v = _random_instance(rng, 3, 4)
        bad = np.ones((3, 4))  # wrong mass
        with pytest.raises(ValueError, match="feasible"):
            solve_fgw(cost, a, b, u, v, lam=0.5, k=1.0, opts=SolverOptions(initial_plan=bad))

    def test_input_validation(self, rng):
        cost, a, b, u, v = _random_instance(rng, 3, 4)
        with pytest.raises(ValueError):
            solve_fgw(cost, a, b, u, v, lam=1.5, k=1.0)
        with pytest.raises(ValueError):
            solve_fgw(cost, a, b, u, v, lam=0.5, k=-1.0)
        with pytest.raises(DimensionMismatch):
            solve_fgw(cost, a, a, u, v, lam=0.5, k=1.0)
        bad = cost.copy()
        bad[0, 0] = np.inf
        with pytest.raises(NonFiniteInput):
            solve_fgw(bad, a, b, u, v, lam=0.5, k=1.0)
