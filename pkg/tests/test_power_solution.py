"""
Tests for the non-myopic power-utility weight path.
"""
import math

import numpy as np
import pytest

from src.errors import InadmissiblePolicyError, IntegrationError
from src.models.market_schemas import Horizon, MarketParams
from src.services.log_solution import pre_default_ratio_log
from src.services.power_solution import (
    integrate_weight_path,
    kappa,
    linearized_weight,
    phi,
    power_constants,
    power_fermat_residual,
    power_h_function,
    power_hjb_residual,
    power_value_post,
    power_value_pre,
    psi_invariant_check,
    solve_terminal_weight,
)
from tests.conftest import PUBLISHED_PATHS, RATIO_TOL, SLOPE_TOL


class TestTerminalWeight:
    """Tests for the weight at maturity."""

    @pytest.mark.parametrize("gamma", sorted(PUBLISHED_PATHS))
    def test_published_terminal_weights(self, market: MarketParams, gamma):
        """Test the terminal weight and slope against the published allocation table."""
        expected_pi, expected_slope = PUBLISHED_PATHS[gamma]
        solution = integrate_weight_path(market, gamma, Horizon(T=1.0))

        assert solution.pi_T == pytest.approx(expected_pi, abs=RATIO_TOL)
        assert solution.kappa_T == pytest.approx(expected_slope, abs=SLOPE_TOL)

    def test_root_of_phi(self, market: MarketParams):
        """Test the terminal weight is a root of phi below alpha."""
        pi_T = solve_terminal_weight(market, 2.0)

        assert abs(phi(market, 2.0, pi_T)) < 1e-12
        assert pi_T < power_constants(market, 2.0).alpha

    def test_phi_is_decreasing(self, market: MarketParams):
        """Test phi is strictly decreasing below 1."""
        values = [phi(market, 2.0, pi) for pi in np.linspace(-2.0, 0.99, 50)]
        assert np.all(np.diff(values) < 0)

    def test_default_free_terminal_weight(self, default_free_market: MarketParams):
        """Test lambda = 0 gives the classical ratio alpha."""
        assert solve_terminal_weight(default_free_market, 2.0) == pytest.approx(power_constants(default_free_market, 2.0).alpha)

    def test_alpha_above_one(self):
        """Test the bracket is expanded toward 1 when alpha >= 1."""
        mp = MarketParams(mu=0.5, sigma=0.3, r=0.02, lam=0.05)
        pi_T = solve_terminal_weight(mp, 1.5)

        assert power_constants(mp, 1.5).alpha > 1
        assert pi_T < 1
        assert abs(phi(mp, 1.5, pi_T)) < 1e-10


class TestWeightPath:
    """Tests for the integrated weight path and its diagnostics."""

    def test_path_shape_and_terminal_condition(self, market: MarketParams, one_year: Horizon):
        """Test the path lives on the horizon grid with f(T) = 1."""
        solution = integrate_weight_path(market, 2.0, one_year)

        assert solution.times.size == one_year.n_steps + 1
        assert solution.weights[-1] == solution.pi_T
        assert solution.f_path[-1] == 1.0
        assert np.all(solution.weights <= solution.constants.alpha)

    def test_weight_rises_toward_maturity(self, market: MarketParams, one_year: Horizon):
        """Test a positive slope means the weight grows as maturity approaches."""
        solution = integrate_weight_path(market, 2.0, one_year)
        assert solution.kappa_T > 0
        assert np.all(np.diff(solution.weights) > 0)

    def test_fermat_condition(self, market: MarketParams, one_year: Horizon):
        """Test f(t) satisfies the first-order condition along the path."""
        solution = integrate_weight_path(market, 2.5, one_year)
        assert np.max(np.abs(power_fermat_residual(solution))) < 1e-12

    def test_hjb_residual(self, market: MarketParams, one_year: Horizon):
        """Test the integrated pair (pi, f) solves the f equation up to discretization error."""
        solution = integrate_weight_path(market, 2.0, one_year)
        assert power_hjb_residual(solution) < 1e-4

    def test_weight_maximizes_h(self, market: MarketParams, one_year: Horizon):
        """Test the path weight is the argmax of the reduced objective for the current f."""
        solution = integrate_weight_path(market, 2.0, one_year)
        pi, f = float(solution.weights[0]), float(solution.f_path[0])
        grid = np.linspace(pi - 0.2, pi + 0.2, 401)
        values = power_h_function(market, 2.0, grid, f)

        assert grid[np.argmax(values)] == pytest.approx(pi, abs=1e-3)

    def test_psi_invariant(self, market: MarketParams):
        """Test the path agrees with the implicit closed-form solution."""
        check = psi_invariant_check(integrate_weight_path(market, 2.0, Horizon(T=5.0)))

        assert check.available
        assert check.max_defect < 1e-6

    def test_psi_unavailable_for_constant_path(self, default_free_market: MarketParams, one_year: Horizon):
        """Test the check reports unavailable for a constant path."""
        check = psi_invariant_check(integrate_weight_path(default_free_market, 2.0, one_year))
        assert not check.available

    def test_linearization(self, market: MarketParams, one_year: Horizon):
        """Test the linearization matches at maturity and stays close within a year."""
        solution = integrate_weight_path(market, 2.0, one_year)

        assert linearized_weight(solution, 1.0) == pytest.approx(solution.pi_T)
        assert linearized_weight(solution, 0.0) == pytest.approx(solution.weights[0], abs=1e-4)
        assert linearized_weight(solution, np.array([0.0, 1.0])).shape == (2,)

    def test_long_horizon_stays_admissible(self, market: MarketParams):
        """Test a thirty-year path stays below alpha and 1."""
        solution = integrate_weight_path(market, 3.0, Horizon(T=30.0))

        assert np.all(solution.weights < 1)
        assert solution.weights[0] < solution.pi_T

    def test_default_free_path(self, default_free_market: MarketParams, one_year: Horizon):
        """Test lambda = 0 gives a constant weight and the classical exponential f."""
        solution = integrate_weight_path(default_free_market, 2.0, one_year)
        alpha = solution.constants.alpha
        growth = 0.5 * (1 - 2.0) * 2.0 * default_free_market.variance * alpha**2

        assert np.allclose(solution.weights, alpha)
        assert solution.f_path[0] == pytest.approx(math.exp(growth))

    def test_routing_near_log(self, market: MarketParams, one_year: Horizon):
        """Test gamma within the routing tolerance of 1 uses the log-utility weight."""
        solution = integrate_weight_path(market, 1.00001, one_year)

        assert solution.routed_to_log
        assert solution.pi_T == pytest.approx(pre_default_ratio_log(market))
        assert np.all(solution.f_path == 1.0)

    def test_inadmissible_default_free(self, default_free_market: MarketParams, one_year: Horizon):
        """Test lambda = 0 with alpha >= 1 is rejected."""
        with pytest.raises(InadmissiblePolicyError):
            integrate_weight_path(default_free_market, 0.9, one_year)

    def test_kappa_pole(self, market: MarketParams):
        """Test evaluating kappa at beta raises IntegrationError."""
        constants = power_constants(market, 2.0)
        with pytest.raises(IntegrationError):
            kappa(constants, 2.0, market.sigma, constants.beta)


class TestPowerValues:
    """Tests for the power-utility value functions."""

    def test_value_at_maturity(self, market: MarketParams, one_year: Horizon):
        """Test the pre-default value equals w^(1-gamma)/(1-gamma) at maturity."""
        solution = integrate_weight_path(market, 2.0, one_year)
        assert power_value_pre(solution, market, 1.0, 2.0) == pytest.approx(-0.5)

    def test_post_default_value(self, market: MarketParams):
        """Test the post-default value applies the haircut."""
        value = power_value_post(market, 2.0, 1.0, 1.0, 2.0, 0.5)
        assert value == pytest.approx(-1.0)

    def test_value_is_finite_and_negative(self, market: MarketParams, one_year: Horizon):
        """Test the value is finite and negative for gamma > 1."""
        solution = integrate_weight_path(market, 2.0, one_year)
        value = power_value_pre(solution, market, 0.0, 1.0)

        assert math.isfinite(value)
        assert value < 0


class TestPathProperties:
    """Convergence and monotonicity properties of the weight path."""

    @pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0])
    def test_hjb_residual_across_gammas(self, market: MarketParams, gamma):
        """Test the f equation holds to a relative residual below 1e-5."""
        solution = integrate_weight_path(market, gamma, Horizon(T=1.0, n_steps=1000))
        assert power_hjb_residual(solution) < 1e-5

    def test_step_halving(self, market: MarketParams):
        """Test halving the RK4 step changes the path by less than 1e-8."""
        coarse = integrate_weight_path(market, 3.0, Horizon(T=30.0, n_steps=30_000))
        fine = integrate_weight_path(market, 3.0, Horizon(T=30.0, n_steps=60_000))

        assert np.max(np.abs(fine.weights[::2] - coarse.weights)) < 1e-8

    @pytest.mark.parametrize("gamma", [2.0, 3.0])
    def test_psi_invariant_over_thirty_years(self, market: MarketParams, gamma):
        """Test the implicit closed form holds along a thirty-year path to a relative defect below 1e-5."""
        check = psi_invariant_check(integrate_weight_path(market, gamma, Horizon(T=30.0)))

        assert check.available, check.reason
        assert check.max_defect < 1e-5

    def test_terminal_weight_decreases_with_gamma(self, market: MarketParams):
        """Test more risk aversion lowers the weight at maturity."""
        weights = [solve_terminal_weight(market, gamma) for gamma in (1.5, 2.0, 2.5, 3.0)]
        assert weights == sorted(weights, reverse=True)

    def test_h_concave_at_path(self, market: MarketParams, one_year: Horizon):
        """Test the reduced objective has a negative second difference at each sampled path weight."""
        solution = integrate_weight_path(market, 2.0, one_year)
        step = 1e-3
        for pi, f in zip(solution.weights[::100], solution.f_path[::100], strict=True):
            values = power_h_function(market, 2.0, np.array([pi - step, pi, pi + step]), f)
            assert values[0] - 2 * values[1] + values[2] < 0
