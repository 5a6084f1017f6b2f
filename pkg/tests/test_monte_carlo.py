"""
Tests for the Monte Carlo wealth simulator.
"""
import math

import numpy as np
import pytest

from src import config
from src.errors import InadmissiblePolicyError, ValidationFailure
from src.models.market_schemas import Horizon, MarketParams, UtilitySpec
from src.models.simulation_schemas import SimConfig
from src.services.log_solution import log_value_function_pre, pre_default_ratio_log
from src.services.monte_carlo import (
    _chunk_sizes,
    constant_weight_study,
    estimate_expected_utility,
    reduced_objective_estimate,
    simulate_wealth,
    summarize,
)
from src.services.power_solution import integrate_weight_path, policy_from_solution, power_value_pre
from src.services.wealth import constant_policy, policy_from_weights

LOG = UtilitySpec(gamma=1.0)


class TestSimulateWealth:
    """Tests for path generation and the default event."""

    def test_reproducible(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test the same seed gives identical draws."""
        policy = constant_policy(0.5, one_year)
        first = simulate_wealth(market, policy, one_year, sim_config)
        second = simulate_wealth(market, policy, one_year, sim_config)

        assert np.array_equal(first.terminal_wealth, second.terminal_wealth)
        assert np.array_equal(first.tau, second.tau)

    def test_independent_of_worker_count(self, monkeypatch, market: MarketParams, one_year: Horizon):
        """Test parallel chunks reproduce the sequential run."""
        monkeypatch.setattr(config, "MC_CHUNK_SIZE", 1000)
        cfg = SimConfig(n_paths=4500, seed=3)
        policy = constant_policy(0.5, one_year)

        monkeypatch.setattr(config, "MC_WORKERS", 1)
        sequential = simulate_wealth(market, policy, one_year, cfg)
        monkeypatch.setattr(config, "MC_WORKERS", 4)
        parallel = simulate_wealth(market, policy, one_year, cfg)

        assert np.array_equal(sequential.terminal_wealth, parallel.terminal_wealth)

    def test_default_frequency(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test the share of defaults before T matches 1 - exp(-lambda T)."""
        risky = market.with_intensity(0.5)
        batch = simulate_wealth(risky, constant_policy(0.3, one_year), one_year, sim_config)
        expected = -math.expm1(-0.5)
        tolerance = 4.0 * math.sqrt(expected * (1 - expected) / batch.n_paths)

        assert batch.defaulted.mean() == pytest.approx(expected, abs=tolerance)

    def test_default_haircut_and_accrual(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test defaulted paths lose the stock share and then earn the risk-free rate."""
        risky = market.with_intensity(0.5)
        batch = simulate_wealth(risky, constant_policy(0.3, one_year), one_year, sim_config)
        hit = batch.defaulted

        assert hit.any()
        assert np.allclose(batch.post_jump_wealth[hit], 0.7 * batch.pre_jump_wealth[hit], rtol=1e-12, atol=0)
        assert np.allclose(
            batch.terminal_wealth[hit],
            batch.post_jump_wealth[hit] * np.exp(risky.r * (1.0 - batch.tau[hit])),
            rtol=1e-12,
            atol=0,
        )
        assert np.all(np.isnan(batch.default_weight[~hit]))
        assert np.all(np.isinf(batch.tau[~hit]))

    def test_no_default_without_intensity(self, default_free_market: MarketParams, one_year: Horizon, sim_config):
        """Test lambda = 0 never defaults."""
        batch = simulate_wealth(default_free_market, constant_policy(0.5, one_year), one_year, sim_config)
        assert not batch.defaulted.any()

    def test_brownian_draws_shared_across_intensities(self, market: MarketParams, one_year: Horizon, sim_config):
        """Test surviving paths see the same Brownian increments whatever the intensity."""
        policy = constant_policy(0.5, one_year)
        base = simulate_wealth(market.with_intensity(0.0), policy, one_year, sim_config)
        risky = simulate_wealth(market, policy, one_year, sim_config)
        survived = ~risky.defaulted

        assert np.allclose(base.terminal_wealth[survived], risky.terminal_wealth[survived])

    def test_trajectories(self, market: MarketParams):
        """Test kept paths are materialized with the post-default segment."""
        horizon = Horizon(T=1.0)
        cfg = SimConfig(n_paths=200, seed=11, keep_paths=True)
        batch = simulate_wealth(market.with_intensity(2.0), constant_policy(0.4, horizon), horizon, cfg)
        paths = batch.trajectories()

        assert len(paths) == 200
        assert paths[0].wealth.size == batch.times.size == 253
        index = next(i for i, path in enumerate(paths) if path.defaulted)
        assert paths[index].wealth[-1] == pytest.approx(batch.terminal_wealth[index])

    def test_trajectories_require_kept_paths(self, market: MarketParams, one_year: Horizon, sim_config):
        """Test materializing paths without keep_paths raises."""
        batch = simulate_wealth(market, constant_policy(0.4, one_year), one_year, sim_config)
        with pytest.raises(ValueError):
            batch.trajectories()

    def test_full_grid_steps_a_constant_policy(self, market: MarketParams, one_year: Horizon):
        """Test full_grid puts a constant policy on the dt grid and draws what a kept-path run draws."""
        policy = constant_policy(0.4, one_year)
        single = simulate_wealth(market, policy, one_year, SimConfig(n_paths=3000, seed=21))
        stepped = simulate_wealth(market, policy, one_year, SimConfig(n_paths=3000, seed=21), full_grid=True)
        kept = simulate_wealth(market, policy, one_year, SimConfig(n_paths=3000, seed=21, keep_paths=True))

        assert single.times.size == 2
        assert stepped.times.size == kept.times.size == 253
        assert np.array_equal(stepped.terminal_wealth, kept.terminal_wealth)

    def test_chunks_capped_by_cells(self, monkeypatch, market: MarketParams, one_year: Horizon):
        """Test chunks shrink so paths times steps stays within the cap, without changing the path count."""
        monkeypatch.setattr(config, "MC_CHUNK_SIZE", 8192)
        monkeypatch.setattr(config, "MC_MAX_CHUNK_CELLS", 252 * 100)
        cfg = SimConfig(n_paths=1050, seed=4)
        policy = constant_policy(0.5, one_year)

        assert _chunk_sizes(1050, 252) == [100] * 10 + [50]
        assert _chunk_sizes(1050, 1) == [1050]
        assert _chunk_sizes(5, 10**9) == [1] * 5

        first = simulate_wealth(market, policy, one_year, cfg, full_grid=True)
        second = simulate_wealth(market, policy, one_year, cfg, full_grid=True)
        assert first.n_paths == 1050
        assert np.array_equal(first.terminal_wealth, second.terminal_wealth)

    def test_policy_must_match_horizon(self, market: MarketParams, sim_config: SimConfig):
        """Test a policy ending before the horizon is rejected."""
        with pytest.raises(ValidationFailure):
            simulate_wealth(market, constant_policy(0.4, Horizon(T=0.5)), Horizon(T=1.0), sim_config)


class TestEstimates:
    """Tests for expected-utility estimates against closed forms."""

    def test_summarize(self):
        """Test mean and standard error, including the degenerate cases."""
        estimate = summarize(np.array([1.0, 2.0, 3.0]))

        assert estimate.mean == pytest.approx(2.0)
        assert estimate.stderr == pytest.approx(1.0 / math.sqrt(3.0))
        assert summarize(np.array([5.0])).stderr == math.inf
        assert summarize(np.array([1.0, -np.inf])).mean == -math.inf

    def test_log_value_matches_closed_form(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test the optimal log policy's Monte Carlo value matches the closed form."""
        policy = constant_policy(pre_default_ratio_log(market), one_year)
        estimate = estimate_expected_utility(simulate_wealth(market, policy, one_year, sim_config), LOG)

        assert estimate.mean == pytest.approx(log_value_function_pre(market, 1.0, 0.0, 1.0), abs=4 * estimate.stderr)

    def test_reduced_objective_matches_closed_form(self, market: MarketParams, one_year: Horizon, sim_config):
        """Test the default-free reduction gives the same expected log utility."""
        policy = constant_policy(pre_default_ratio_log(market), one_year)
        estimate = reduced_objective_estimate(market, policy, one_year, sim_config)

        assert estimate.mean == pytest.approx(log_value_function_pre(market, 1.0, 0.0, 1.0), abs=4 * estimate.stderr)

    def test_power_value_matches_closed_form(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test the non-myopic power policy's Monte Carlo value matches V_pre minus the offset."""
        spec = UtilitySpec(gamma=2.0)
        solution = integrate_weight_path(market, 2.0, one_year)
        batch = simulate_wealth(market, policy_from_solution(solution), one_year, sim_config)
        estimate = estimate_expected_utility(batch, spec)
        closed = power_value_pre(solution, market, 0.0, 1.0) + 1.0

        assert batch.times.size == 253
        assert estimate.mean == pytest.approx(closed, abs=4 * estimate.stderr)


class TestConstantWeightStudy:
    """Tests for the grid comparison of constant weights."""

    def test_best_weight_and_inadmissible_rows(self, market: MarketParams, one_year: Horizon, sim_config):
        """Test the best grid weight is nearest the optimum and weight 1 is flagged."""
        study = constant_weight_study(market, one_year, sim_config, [0.25, 0.5, 0.75, 1.0], LOG)

        assert study.best_pi == 0.75
        assert [row.admissible for row in study.rows] == [True, True, True, False]
        assert study.rows[-1].mean is None

    def test_fine_grid_argmax(self, market: MarketParams, one_year: Horizon):
        """Test a 21-point grid gives unimodal means peaking within one step of the optimal ratio."""
        grid = np.linspace(-0.5, 0.95, 21)
        study = constant_weight_study(market, one_year, SimConfig(n_paths=100_000, seed=7), grid, LOG)
        means = np.array([row.mean for row in study.rows])
        peak = int(np.argmax(means))

        assert all(row.admissible for row in study.rows)
        assert np.all(np.diff(means[: peak + 1]) > 0)
        assert np.all(np.diff(means[peak:]) < 0)
        assert abs(study.best_pi - pre_default_ratio_log(market)) <= grid[1] - grid[0]
        assert study.best_pi == pytest.approx(0.7325)

    def test_constant_policy_rejects_one(self, one_year: Horizon):
        """Test a weight of exactly 1 is inadmissible."""
        with pytest.raises(InadmissiblePolicyError):
            constant_policy(1.0, one_year)


class TestReductionIdentity:
    """Agreement between the jump simulation and the default-free reduction."""

    @pytest.mark.parametrize("lam", [0.024, 0.3, 1.5])
    @pytest.mark.parametrize("weights", [[0.0, 0.0], [0.3, 0.3], [-0.2, -0.2], [0.2, 0.6], [0.7, 0.1]])
    def test_estimators_agree(self, market: MarketParams, lam, weights):
        """Test both log objectives agree within three combined standard errors plus the quadrature error."""
        horizon = Horizon(T=1.0)
        mp = market.with_intensity(lam)
        policy = policy_from_weights([0.0, 1.0], weights)
        cfg = SimConfig(n_paths=20_000, seed=13)
        jump = estimate_expected_utility(simulate_wealth(mp, policy, horizon, cfg), LOG)
        reduced = reduced_objective_estimate(mp, policy, horizon, cfg)

        assert jump.mean == pytest.approx(reduced.mean, abs=3 * (jump.stderr + reduced.stderr) + 1e-5)

    def test_cash_only_is_exact(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test a zero weight grows wealth at the risk-free rate on every path."""
        batch = simulate_wealth(market.with_intensity(0.5), constant_policy(0.0, one_year), one_year, sim_config)
        estimate = estimate_expected_utility(batch, LOG)

        assert np.allclose(batch.terminal_wealth, math.exp(market.r))
        assert estimate.mean == pytest.approx(market.r)
        assert estimate.stderr == pytest.approx(0.0, abs=1e-12)

    def test_immediate_default_limit(self, market: MarketParams, one_year: Horizon, sim_config: SimConfig):
        """Test a huge intensity halves a half-stock position almost surely."""
        batch = simulate_wealth(market.with_intensity(50.0), constant_policy(0.5, one_year), one_year, sim_config)
        assert batch.terminal_wealth.mean() == pytest.approx(0.5 * math.exp(market.r), rel=0.02)
