import numpy as np
import pytest

from rescrl import (ConfigError, OracleDiagnosticsError, Policy, QuadraticCost,
                    dual_perturbed, dual_regularized, equilibrium_residual,
                    evaluate_policy, gen_random_cmdp, golden_min, optimal_table_value,
                    primal_value_map, solve_occupancy_lp, solve_regularized,
                    solve_scalarized_mdp)
from conftest import (enumerate_deterministic_policies, hand_instance,
                       single_state_model)


class TestSolveScalarizedMdp:
    def test_single_state(self):
        model = single_state_model(r=1.0, gamma=0.9)
        sol = solve_scalarized_mdp(model, np.zeros(1))
        assert sol.value == pytest.approx(10.0, abs=1e-9)

    def test_matches_exhaustive_enumeration(self):
        model = hand_instance()
        sol = solve_scalarized_mdp(model, np.zeros(1))
        best = max(
            evaluate_policy(model, policy).v_reward_rho
            for policy in enumerate_deterministic_policies(2, 2)
        )
        assert sol.value == pytest.approx(best, abs=1e-9)

    def test_dual_function_is_convex_along_segments(self, small_random_model):
        rng = np.random.default_rng(13)
        for _ in range(5):
            l1, l2 = rng.uniform(0, 3, 2)
            d = lambda lam: solve_scalarized_mdp(small_random_model, np.array([lam])).value
            mid = d(0.5 * (l1 + l2))
            assert mid <= 0.5 * (d(l1) + d(l2)) + 1e-8


class TestOccupancyLp:
    def test_unconstrained_matches_scalarized(self, small_random_model):
        model = gen_random_cmdp(seed=5, num_states=4, num_actions=2,
                                num_constraints=0, gamma=0.9)
        report = solve_occupancy_lp(model, np.zeros(0))
        sol = solve_scalarized_mdp(model, np.zeros(0))
        assert report.status == "optimal"
        assert report.primal_value == pytest.approx(sol.value, abs=1e-6)

    def test_vacuous_constraint_matches_unconstrained(self, small_random_model):
        model = small_random_model
        report = solve_occupancy_lp(model, np.array([-model.value_bound]))
        sol = solve_scalarized_mdp(model, np.zeros(1) * 0.0)
        unconstrained = optimal_table_value(model, model.reward).value
        assert report.status == "optimal"
        assert report.primal_value == pytest.approx(unconstrained, abs=1e-6)

    def test_above_per_constraint_max_is_infeasible(self, small_random_model):
        model = small_random_model
        xi_max = optimal_table_value(model, model.translated[0]).value
        report = solve_occupancy_lp(model, np.array([xi_max + 0.05]))
        assert report.status == "infeasible"
        report2 = solve_occupancy_lp(model, np.array([xi_max - 0.05]))
        assert report2.status == "optimal"

    def test_occupancy_mass_and_policy_rows(self, small_random_model):
        report = solve_occupancy_lp(small_random_model, np.array([-2.0]))
        assert report.status == "optimal"
        assert report.occupancy.sum() == pytest.approx(1.0, abs=1e-8)
        assert np.allclose(report.policy.probs.sum(axis=1), 1.0, atol=1e-10)
        bundle = evaluate_policy(small_random_model, report.policy)
        assert bundle.v_utils_rho[0] >= -2.0 - 1e-6

    def test_xi_outside_box_rejected(self, small_random_model):
        with pytest.raises(ConfigError):
            solve_occupancy_lp(small_random_model, np.array([11.0]))


class TestPrimalValueMap:
    def test_lemma1_monotone_and_concave(self, small_random_model):
        grid = np.linspace(-10.0, 10.0, 21)
        values, feasible = primal_value_map(small_random_model, grid[:, None])
        f = values[feasible]
        assert np.all(np.diff(f) <= 1e-6)
        assert np.all(f[1:-1] >= 0.5 * (f[:-2] + f[2:]) - 1e-6)
        # the feasible region is a prefix of the grid (left side)
        assert np.all(np.diff(feasible.astype(int)) <= 0)

    def test_single_state_zero_g(self):
        # g == 0 forever: feasible iff xi <= 0, value always V_r = 10
        model = single_state_model(r=1.0, u=0.5, b=5.0, gamma=0.9)
        values, feasible = primal_value_map(model, np.array([[-1.0], [0.0], [0.5]]))
        assert feasible.tolist() == [True, True, False]
        assert values[0] == pytest.approx(10.0, abs=1e-6)
        assert values[1] == pytest.approx(10.0, abs=1e-6)


class TestDualRegularized:
    def test_at_zero_multiplier(self, small_random_model):
        best = optimal_table_value(small_random_model, small_random_model.reward).value
        assert dual_regularized(small_random_model, QuadraticCost(1.0),
                                np.zeros(1)) == pytest.approx(best, abs=1e-8)

    def test_conjugate_part_closed_form(self, small_random_model):
        # alpha=1, lam=2: max of -xi^2 - 2 xi is at xi=-1 with value +1
        d0 = solve_scalarized_mdp(small_random_model, np.array([2.0])).value
        dh = dual_regularized(small_random_model, QuadraticCost(1.0), np.array([2.0]))
        assert dh == pytest.approx(d0 + 1.0, abs=1e-8)

    def test_convex_along_segments(self, small_random_model):
        cost = QuadraticCost(0.5)
        rng = np.random.default_rng(14)
        for _ in range(5):
            l1, l2 = rng.uniform(0, 2, 2)
            f = lambda x: dual_regularized(small_random_model, cost, np.array([x]))
            assert f(0.5 * (l1 + l2)) <= 0.5 * (f(l1) + f(l2)) + 1e-8


class TestWeakDualityAndConjugacy:
    def test_weak_duality_on_samples(self, small_random_model):
        model = small_random_model
        rng = np.random.default_rng(15)
        grid = np.linspace(-10, 10, 9)
        values, feasible = primal_value_map(model, grid[:, None])
        for _ in range(6):
            lam = rng.uniform(0, 3)
            d_lam = solve_scalarized_mdp(model, np.array([lam])).value
            for xi, v, ok in zip(grid, values, feasible):
                if ok:
                    assert d_lam - lam * xi >= v - 1e-6

    def test_conjugacy_spot_check(self, small_random_model):
        # D(lam) equals max over xi of {lam xi + V*(xi)} up to grid resolution
        model = small_random_model
        grid = np.linspace(-10, 10, 161)
        values, feasible = primal_value_map(model, grid[:, None])
        step = grid[1] - grid[0]
        for lam in (0.0, 0.4, 1.1):
            direct = solve_scalarized_mdp(model, np.array([lam])).value
            via_conjugate = np.max(lam * grid[feasible] + values[feasible])
            assert abs(direct - via_conjugate) <= lam * step + step + 1e-4


class TestDualPerturbed:
    def test_agrees_with_lp_and_flags(self, small_random_model):
        model = small_random_model
        grid = np.linspace(-10, 10, 11)
        values, feasible = primal_value_map(model, grid[:, None])
        for xi, v, ok in zip(grid, values, feasible):
            report = dual_perturbed(model, np.array([xi]), cap=1e4)
            assert (report.status == "optimal") == bool(ok)
            if ok:
                assert report.dual_value == pytest.approx(v, abs=1e-3)


class TestSolveRegularized:
    def test_unconstrained_model(self):
        model = gen_random_cmdp(seed=5, num_states=4, num_actions=2,
                                num_constraints=0, gamma=0.9)
        report = solve_regularized(model, QuadraticCost(1.0))
        best = optimal_table_value(model, model.reward).value
        assert report.status == "optimal"
        assert report.primal_value == pytest.approx(best, abs=1e-8)
        assert report.dual_value == pytest.approx(best, abs=1e-8)

    def test_single_state_zero_g_optimum_at_zero(self):
        model = single_state_model(r=1.0, u=0.5, b=5.0, gamma=0.9)  # g == 0
        report = solve_regularized(model, QuadraticCost(1.0), xi_grid_resolution=41)
        assert report.status == "optimal"
        assert report.primal_value == pytest.approx(10.0, abs=1e-4)
        assert abs(report.xi_star[0]) < 1e-3

    def test_primal_and_dual_paths_agree(self, small_random_model):
        report = solve_regularized(small_random_model, QuadraticCost(0.2),
                                   xi_grid_resolution=41, lambda_search=100.0)
        assert report.status == "optimal"
        assert abs(report.dual_value - report.primal_value) <= 1e-3

    def test_small_cap_raises_diagnostics(self, small_random_model):
        # alpha = 1 pushes the optimal multiplier above a cap of 2
        with pytest.raises(OracleDiagnosticsError):
            solve_regularized(small_random_model, QuadraticCost(1.0),
                              xi_grid_resolution=41, lambda_search=2.0)

    def test_corollary_dual_bound_ex_post(self, small_random_model):
        model = small_random_model
        cost = QuadraticCost(0.2)
        report = solve_regularized(model, cost, xi_grid_resolution=41)
        # strictly feasible pair: the LP policy of a tighter point, paired
        # with a more relaxed xi_bar so the slack is strictly positive
        feas = solve_occupancy_lp(model, np.array([-3.0]))
        xi_bar = np.array([-4.0])
        bundle = evaluate_policy(model, feas.policy)
        slack = float(bundle.v_utils_rho[0] - xi_bar[0])
        assert slack > 0
        c_h = (report.primal_value - (bundle.v_reward_rho - cost.value(xi_bar))) / slack
        assert np.all(report.lambda_star <= c_h + 1e-6)


class TestEquilibriumResidual:
    def test_small_at_optimum_large_away(self):
        model = gen_random_cmdp(seed=2, num_states=20, num_actions=5,
                                num_constraints=1, gamma=0.9, threshold=9.0)
        cost = QuadraticCost(0.2)
        report = solve_regularized(model, cost, xi_grid_resolution=41)
        delta = 1e-3
        at_opt, flags = equilibrium_residual(model, cost, report.xi_star, delta=delta)
        assert not flags.any()
        assert np.abs(at_opt).max() <= 10 * delta
        away, _ = equilibrium_residual(model, cost, report.xi_star - 2.0, delta=delta)
        assert np.abs(away).max() >= 10 * np.abs(at_opt).max()

    def test_zero_cost_returns_slope(self, small_random_model):
        residual, _ = equilibrium_residual(small_random_model, QuadraticCost(0.0),
                                           np.array([-2.0]), delta=1e-3)
        values, _ = primal_value_map(small_random_model,
                                     np.array([[-2.0 - 1e-3], [-2.0 + 1e-3]]))
        slope = (values[1] - values[0]) / 2e-3
        assert residual[0] == pytest.approx(slope, abs=1e-9)

    def test_one_sided_near_feasibility_boundary(self, small_random_model):
        model = small_random_model
        xi_max = optimal_table_value(model, model.translated[0]).value
        residual, flags = equilibrium_residual(model, QuadraticCost(0.1),
                                               np.array([xi_max - 5e-4]), delta=1e-3)
        assert flags[0]


def test_golden_min_quadratic():
    x, val = golden_min(lambda t: (t - 1.3) ** 2 + 0.5, 0.0, 4.0, tol=1e-10)
    assert x == pytest.approx(1.3, abs=1e-7)
    assert val == pytest.approx(0.5, abs=1e-12)
