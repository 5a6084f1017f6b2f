"""
Monte Carlo simulation of wealth with a single default event.

Paths are generated in chunks of at most config.MC_CHUNK_SIZE paths, shrunk so a chunk holds
no more than config.MC_MAX_CHUNK_CELLS normals (paths times steps). Chunk i draws from
SeedSequence([seed, i]), spawned into a Brownian stream and a default-time stream,
so results do not depend on the number of workers or the order chunks finish in.
The default stream is drawn even when lambda = 0, which keeps Brownian increments
identical across intensities.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import trapezoid

from src import config
from src.errors import InadmissiblePolicyError, ValidationFailure
from src.models.market_schemas import Horizon, MarketParams, UtilitySpec
from src.models.policy_schemas import PolicyPath
from src.models.simulation_schemas import MonteCarloEstimate, SimConfig, SimulationBatch, WeightStudy, WeightStudyRow
from src.services.wealth import constant_policy, ensure_admissible, utility_array

logger = logging.getLogger(__name__)


def _chunk_sizes(n_paths: int, n_steps: int = 1) -> list[int]:
    size = max(1, min(config.MC_CHUNK_SIZE, config.MC_MAX_CHUNK_CELLS // max(1, n_steps)))
    full, rest = divmod(n_paths, size)
    return [size] * full + ([rest] if rest else [])


def _chunk_generators(seed: int, chunk_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    brownian_ss, default_ss = np.random.SeedSequence([seed, chunk_index]).spawn(2)
    return np.random.default_rng(brownian_ss), np.random.default_rng(default_ss)


def _run_chunks(worker, n_paths: int, n_steps: int) -> list:
    sizes = _chunk_sizes(n_paths, n_steps)
    jobs = list(enumerate(sizes))
    if config.MC_WORKERS == 1 or len(jobs) == 1:
        return [worker(index, size) for index, size in jobs]
    with ThreadPoolExecutor(max_workers=config.MC_WORKERS) as executor:
        return list(executor.map(lambda job: worker(*job), jobs))


def simulation_grid(horizon: Horizon, cfg: SimConfig, single_step: bool) -> np.ndarray:
    if single_step:
        return np.array([0.0, horizon.T])
    n_steps = max(1, math.ceil(horizon.T / cfg.dt - 1e-9))
    times = np.linspace(0.0, horizon.T, n_steps + 1)
    times[-1] = horizon.T
    return times


def _step_weights(policy: PolicyPath, times: np.ndarray) -> np.ndarray:
    # weight in force on (t_k, t_{k+1}] is the policy value at t_k
    return np.asarray(policy.weight_at(times[:-1]), dtype=float)


def _log_increments(mp: MarketParams, weights: np.ndarray, steps: np.ndarray, normals: np.ndarray) -> np.ndarray:
    drift = (mp.r + weights * mp.excess_return - 0.5 * mp.variance * weights**2) * steps
    return drift + mp.sigma * weights * np.sqrt(steps) * normals


def _validate(mp: MarketParams, policy: PolicyPath, horizon: Horizon) -> None:
    ensure_admissible(policy.pre_weights)
    if abs(policy.maturity - horizon.T) > 1e-12 * max(1.0, horizon.T):
        raise ValidationFailure(f"policy ends at {policy.maturity} but the horizon is {horizon.T}")


def simulate_wealth(
    mp: MarketParams, policy: PolicyPath, horizon: Horizon, cfg: SimConfig, full_grid: bool = False
) -> SimulationBatch:
    """
    Simulate wealth from W_0 = 1 with an exponential default time independent of the Brownian motion.

    Between grid nodes the weight is constant and the log-wealth step is exact. At a default
    tau <= T the stock share (1 - pi_{tau-}) is kept and accrues at r until T.

    Constant policies take one exact step unless paths are kept or full_grid is set; full_grid
    puts them on the dt grid so they share Brownian draws with a time-varying policy.
    """
    _validate(mp, policy, horizon)
    single_step = policy.is_constant and not (cfg.keep_paths or full_grid)
    times = simulation_grid(horizon, cfg, single_step)
    steps = np.diff(times)
    weights = _step_weights(policy, times)
    T = horizon.T
    logger.info(f"simulating {cfg.n_paths} paths on {steps.size} steps (lambda={mp.lam}, seed={cfg.seed})")

    def worker(chunk_index: int, size: int) -> dict[str, np.ndarray]:
        brownian, default = _chunk_generators(cfg.seed, chunk_index)
        normals = brownian.standard_normal((size, steps.size))
        uniforms = default.random(size)
        tau = -np.log1p(-uniforms) / mp.lam if mp.lam > 0 else np.full(size, np.inf)

        log_x = np.zeros((size, times.size))
        log_x[:, 1:] = np.cumsum(_log_increments(mp, weights, steps, normals), axis=1)
        terminal = np.exp(log_x[:, -1])

        hit = tau <= T
        pre_jump = np.full(size, np.nan)
        post_jump = np.full(size, np.nan)
        default_weight = np.full(size, np.nan)
        if np.any(hit):
            rows = np.flatnonzero(hit)
            hit_tau = tau[rows]
            step_index = np.clip(np.searchsorted(times, hit_tau, side="left") - 1, 0, steps.size - 1)
            partial = hit_tau - times[step_index]
            pi = weights[step_index]
            log_at_tau = log_x[rows, step_index] + _log_increments(mp, pi, partial, normals[rows, step_index])
            pre_jump[rows] = np.exp(log_at_tau)
            post_jump[rows] = (1.0 - pi) * pre_jump[rows]
            default_weight[rows] = pi
            terminal[rows] = post_jump[rows] * np.exp(mp.r * (T - hit_tau))
        return {
            "terminal": terminal,
            "tau": np.where(hit, tau, np.inf),
            "pre_jump": pre_jump,
            "post_jump": post_jump,
            "default_weight": default_weight,
            "paths": np.exp(log_x) if cfg.keep_paths else None,
        }

    chunks = _run_chunks(worker, cfg.n_paths, steps.size)

    def stack(key: str) -> np.ndarray:
        return np.concatenate([chunk[key] for chunk in chunks])

    batch = SimulationBatch(
        times=times,
        weights=weights,
        terminal_wealth=stack("terminal"),
        tau=stack("tau"),
        pre_jump_wealth=stack("pre_jump"),
        post_jump_wealth=stack("post_jump"),
        default_weight=stack("default_weight"),
        rate=mp.r,
        paths=np.vstack([chunk["paths"] for chunk in chunks]) if cfg.keep_paths else None,
    )
    logger.debug(f"{int(batch.defaulted.sum())} of {batch.n_paths} paths defaulted before T={T}")
    return batch


def summarize(values: np.ndarray) -> MonteCarloEstimate:
    """Sample mean and standard error with compensated summation; -inf if any value is -inf."""
    n = int(values.size)
    if n == 0:
        raise ValidationFailure("no samples to summarize")
    if np.any(np.isneginf(values)):
        return MonteCarloEstimate(-math.inf, math.inf, n)
    mean = math.fsum(values) / n
    if n == 1:
        return MonteCarloEstimate(mean, math.inf, n)
    variance = math.fsum((values - mean) ** 2) / (n - 1)
    return MonteCarloEstimate(mean, math.sqrt(variance / n), n)


def estimate_expected_utility(batch: SimulationBatch, spec: UtilitySpec) -> MonteCarloEstimate:
    """Mean and standard error of the normalized utility of terminal wealth."""
    values = utility_array(spec, batch.terminal_wealth)
    estimate = summarize(values)
    if math.isinf(estimate.mean):
        logger.warning("nonpositive terminal wealth encountered, the strategy is inadmissible")
    return estimate


def reduced_objective_estimate(mp: MarketParams, policy: PolicyPath, horizon: Horizon, cfg: SimConfig) -> MonteCarloEstimate:
    """
    Log-utility objective with the default time integrated out.

    Simulates the default-free wealth X_t and averages
    int_0^T lambda e^{-lambda t} log((1 - pi_t) X_t) dt + e^{-lambda T} log X_T + r (T - (1 - e^{-lambda T}) / lambda),
    with the time integral by the trapezoid rule on the simulation grid.
    """
    _validate(mp, policy, horizon)
    times = simulation_grid(horizon, cfg, single_step=False)
    steps = np.diff(times)
    weights = _step_weights(policy, times)
    node_weights = np.asarray(policy.weight_at(times), dtype=float)
    T, lam = horizon.T, mp.lam
    if lam > 0:
        discount = lam * np.exp(-lam * times)
        accrual = mp.r * (T + math.expm1(-lam * T) / lam)
    else:
        discount = np.zeros_like(times)
        accrual = 0.0
    survival_T = math.exp(-lam * T)

    def worker(chunk_index: int, size: int) -> np.ndarray:
        brownian, _ = _chunk_generators(cfg.seed, chunk_index)
        normals = brownian.standard_normal((size, steps.size))
        log_x = np.zeros((size, times.size))
        log_x[:, 1:] = np.cumsum(_log_increments(mp, weights, steps, normals), axis=1)
        running = trapezoid(discount * (np.log1p(-node_weights) + log_x), times, axis=1)
        return running + survival_T * log_x[:, -1] + accrual

    values = np.concatenate(_run_chunks(worker, cfg.n_paths, steps.size))
    return summarize(values)


def constant_weight_study(
    mp: MarketParams, horizon: Horizon, cfg: SimConfig, grid, spec: UtilitySpec
) -> WeightStudy:
    """Estimate the objective of each constant weight on the grid with common random numbers."""
    rows = []
    for pi in grid:
        pi = float(pi)
        try:
            policy = constant_policy(pi, horizon)
        except InadmissiblePolicyError as e:
            logger.info(f"weight {pi} skipped: {e}")
            rows.append(WeightStudyRow(pi=pi, admissible=False, reason=str(e)))
            continue
        estimate = estimate_expected_utility(simulate_wealth(mp, policy, horizon, cfg), spec)
        rows.append(WeightStudyRow(pi=pi, admissible=True, mean=estimate.mean, stderr=estimate.stderr))
    candidates = [row for row in rows if row.admissible and math.isfinite(row.mean)]
    best = max(candidates, key=lambda row: row.mean).pi if candidates else None
    return WeightStudy(rows=rows, best_pi=best)
