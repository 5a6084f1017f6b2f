"""
Non-myopic pre-default weight for power utility (gamma != 1).

The weight at maturity is the root of phi(pi) = gamma sigma^2 (alpha - pi) - lambda (1 - pi)^(-gamma).
Earlier weights follow from integrating d pi / dt = kappa(pi) backward from T, and the
value ansatz f(t) is recovered algebraically from pi_t through the first-order condition.
"""

import logging
import math

import numpy as np
from scipy.optimize import brentq

from src import config
from src.errors import DomainError, InadmissiblePolicyError, IntegrationError, RootNotFoundError
from src.models.market_schemas import Horizon, MarketParams
from src.models.policy_schemas import PolicyPath, PowerConstants, PowerSolution, PsiCheck, PsiConstants
from src.services.log_solution import classical_merton_ratio, pre_default_ratio_log

logger = logging.getLogger(__name__)

POLE_TOLERANCE = 1e-10
MAX_BRACKET_EXPANSIONS = 200


def power_constants(mp: MarketParams, gamma: float) -> PowerConstants:
    if not gamma > 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    var = mp.variance
    return PowerConstants(
        gamma=gamma,
        alpha=mp.excess_return / (gamma * var),
        beta=(mp.excess_return + var) / ((gamma + 1.0) * var),
        eta=(mp.excess_return - mp.lam) / (gamma * (gamma + 1.0) * var),
    )


def phi(mp: MarketParams, gamma: float, pi: float) -> float:
    """Terminal condition function; strictly decreasing on (-inf, 1) when lambda > 0."""
    if pi >= 1:
        return -math.inf
    alpha = mp.excess_return / (gamma * mp.variance)
    return gamma * mp.variance * (alpha - pi) - mp.lam * (1.0 - pi) ** (-gamma)


def _phi_prime(mp: MarketParams, gamma: float, pi: float) -> float:
    return -gamma * mp.variance - mp.lam * gamma * (1.0 - pi) ** (-gamma - 1.0)


def solve_terminal_weight(mp: MarketParams, gamma: float) -> float:
    """Unique root of phi on (-inf, 1); equals alpha when lambda = 0."""
    if not gamma > 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    alpha = mp.excess_return / (gamma * mp.variance)
    if mp.lam == 0:
        return alpha

    hi = alpha
    if alpha >= 1:
        gap = 0.5
        for _ in range(MAX_BRACKET_EXPANSIONS):
            hi = 1.0 - gap
            if phi(mp, gamma, hi) < 0:
                break
            gap *= 0.5
        else:
            raise RootNotFoundError(f"no upper bracket below 1 for phi (alpha={alpha}, gamma={gamma}, lambda={mp.lam})")
    lo = hi - 1.0 - mp.lam * (1.0 - hi) ** (-gamma) / (gamma * mp.variance)

    phi_lo, phi_hi = phi(mp, gamma, lo), phi(mp, gamma, hi)
    if not (phi_lo > 0 > phi_hi):
        raise RootNotFoundError(
            f"phi does not change sign on [{lo}, {hi}]: phi(lo)={phi_lo}, phi(hi)={phi_hi} "
            f"(mu={mp.mu}, sigma={mp.sigma}, r={mp.r}, lambda={mp.lam}, gamma={gamma})"
        )
    root, result = brentq(lambda p: phi(mp, gamma, p), lo, hi, xtol=1e-15, maxiter=200, full_output=True)
    if not result.converged:
        raise RootNotFoundError(f"brentq did not converge: {result.flag}")

    # one Newton polish step, kept only if it improves the residual
    polished = root - phi(mp, gamma, root) / _phi_prime(mp, gamma, root)
    if polished < 1 and abs(phi(mp, gamma, polished)) < abs(phi(mp, gamma, root)):
        root = polished
    return root


def kappa(constants: PowerConstants, gamma: float, sigma: float, pi: float) -> float:
    """Right-hand side of the weight ODE: gamma sigma^2 (1-pi)(alpha-pi)(pi^2/2 - beta pi + eta) / (pi - beta)."""
    gap = pi - constants.beta
    if abs(gap) < POLE_TOLERANCE:
        raise IntegrationError(f"weight {pi} reached the pole of kappa at beta={constants.beta}")
    quadratic = 0.5 * pi * pi - constants.beta * pi + constants.eta
    return gamma * sigma * sigma * (1.0 - pi) * (constants.alpha - pi) * quadratic / gap


def _rk4_backward(rhs, y_terminal: float, times: np.ndarray) -> np.ndarray:
    values = np.empty_like(times)
    values[-1] = y_terminal
    y = y_terminal
    for k in range(times.size - 1, 0, -1):
        h = times[k] - times[k - 1]
        k1 = rhs(y)
        k2 = rhs(y - 0.5 * h * k1)
        k3 = rhs(y - 0.5 * h * k2)
        k4 = rhs(y - h * k3)
        y = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[k - 1] = y
    return values


def f_from_weights(mp: MarketParams, gamma: float, weights: np.ndarray, times: np.ndarray) -> np.ndarray:
    """f(t) from the first-order condition; the classical exponential when lambda = 0."""
    constants_alpha = mp.excess_return / (gamma * mp.variance)
    if mp.lam == 0:
        growth = 0.5 * (1.0 - gamma) * gamma * mp.variance * constants_alpha**2
        return np.exp(growth * (times[-1] - times))
    return mp.lam * (1.0 - weights) ** (-gamma) / (gamma * mp.variance * (constants_alpha - weights))


def limiting_weight(mp: MarketParams, gamma: float) -> float:
    """min(alpha, 1): the weight a default-free optimum runs into when it has no interior solution."""
    return min(classical_merton_ratio(mp, gamma), 1.0)


def _routed_log_solution(mp: MarketParams, gamma: float, horizon: Horizon) -> PowerSolution:
    if gamma != 1.0:
        logger.warning(f"gamma={gamma} is within {config.LOG_ROUTING_TOL} of 1, using the log-utility weight")
    pi = pre_default_ratio_log(mp)
    if pi >= 1:
        raise InadmissiblePolicyError(f"log-utility weight {pi} >= 1 (lambda = 0 with mu - r >= sigma^2)")
    times = horizon.grid()
    return PowerSolution(
        market=mp,
        gamma=gamma,
        pi_T=pi,
        path=PolicyPath(times=times, pre_weights=np.full(times.size, pi)),
        f_path=np.ones(times.size),
        constants=power_constants(mp, gamma),
        kappa_T=0.0,
        routed_to_log=True,
    )


def integrate_weight_path(mp: MarketParams, gamma: float, horizon: Horizon) -> PowerSolution:
    """Integrate the weight ODE backward from T with fixed-step RK4 on the horizon grid."""
    if abs(gamma - 1.0) <= config.LOG_ROUTING_TOL:
        return _routed_log_solution(mp, gamma, horizon)

    constants = power_constants(mp, gamma)
    pi_T = solve_terminal_weight(mp, gamma)
    if pi_T >= 1:
        raise InadmissiblePolicyError(f"terminal weight {pi_T} >= 1 (lambda = 0 with alpha >= 1)")
    times = horizon.grid()

    if mp.lam == 0:
        weights = np.full(times.size, pi_T)
        kappa_T = 0.0
    else:
        kappa_T = kappa(constants, gamma, mp.sigma, pi_T)
        weights = _rk4_backward(lambda p: kappa(constants, gamma, mp.sigma, p), pi_T, times)

    ceiling = constants.alpha + 1e-12 * max(1.0, abs(constants.alpha))
    if not np.all(np.isfinite(weights)):
        raise IntegrationError("weight path diverged")
    if np.any(weights > ceiling) or np.any(weights >= 1):
        raise IntegrationError(f"weight path left the region pi <= alpha={constants.alpha}, pi < 1 (max {weights.max()})")

    f_path = f_from_weights(mp, gamma, weights, times)
    if abs(f_path[-1] - 1.0) > 1e-10:
        raise IntegrationError(f"f(T) = {f_path[-1]} instead of 1")
    f_path[-1] = 1.0
    logger.debug(f"gamma={gamma}: pi_T={pi_T:.8g}, kappa(pi_T)={kappa_T:.6g}, pi_0={weights[0]:.8g}")
    return PowerSolution(
        market=mp,
        gamma=gamma,
        pi_T=pi_T,
        path=PolicyPath(times=times, pre_weights=weights),
        f_path=f_path,
        constants=constants,
        kappa_T=kappa_T,
    )


def policy_from_solution(solution: PowerSolution) -> PolicyPath:
    return solution.path


def psi_constants(constants: PowerConstants, gamma: float, sigma: float) -> PsiConstants:
    alpha, beta, eta = constants.alpha, constants.beta, constants.eta
    delta = beta * beta - 2.0 * eta
    if delta < 0:
        return PsiConstants(Delta=delta, available=False, reason=f"Delta = {delta:.6g} < 0")
    scale = gamma * sigma * sigma * (1.0 - alpha)
    den1 = scale * (2.0 * beta - 2.0 * eta - 1.0)
    den2 = scale * (2.0 * alpha * beta - alpha * alpha - 2.0 * eta)
    if den1 == 0 or den2 == 0:
        return PsiConstants(Delta=delta, available=False, reason="degenerate exponent denominators")
    d1, d2 = 1.0 / den1, 1.0 / den2
    root = math.sqrt(delta)
    return PsiConstants(
        d1=d1,
        d2=d2,
        D=(1.0 - beta) * d1 + (beta - alpha) * d2,
        Delta=delta,
        q_minus=beta - root,
        q_plus=beta + root,
        available=True,
    )


def log_psi(psi: PsiConstants, constants: PowerConstants, pi: np.ndarray) -> np.ndarray:
    """log Psi(pi); its derivative in pi is 1 / kappa(pi). Caller ensures all bases are positive."""
    root = math.sqrt(psi.Delta)
    spread = (psi.d1 - psi.d2) * root
    return (
        -2.0 * (1.0 - constants.beta) * psi.d1 * np.log(1.0 - pi)
        - 2.0 * (constants.beta - constants.alpha) * psi.d2 * np.log(constants.alpha - pi)
        + (psi.D - spread) * np.log(pi - psi.q_minus)
        + (psi.D + spread) * np.log(psi.q_plus - pi)
    )


def psi_invariant_check(solution: PowerSolution) -> PsiCheck:
    """Max relative defect of Psi(pi_t) = Psi(pi_T) e^{-(T - t)} along the integrated path."""
    if solution.routed_to_log or solution.kappa_T == 0.0:
        return PsiCheck(available=False, reason="constant path")
    if solution.constants.alpha >= 1:
        return PsiCheck(available=False, reason="alpha >= 1")
    psi = psi_constants(solution.constants, solution.gamma, solution.market.sigma)
    if not psi.available:
        logger.warning(f"Psi check unavailable: {psi.reason}")
        return PsiCheck(available=False, reason=psi.reason)

    weights, times = solution.weights, solution.times
    alpha = solution.constants.alpha
    bases_positive = (
        np.all(1.0 - weights > 0)
        and np.all(alpha - weights > 0)
        and np.all(weights - psi.q_minus > 0)
        and np.all(psi.q_plus - weights > 0)
    )
    if not bases_positive:
        logger.warning("Psi check unavailable: a base factor is nonpositive along the path")
        return PsiCheck(available=False, reason="nonpositive base factor")

    log_values = log_psi(psi, solution.constants, weights)
    defect = log_values - log_values[-1] + (times[-1] - times)
    return PsiCheck(available=True, max_defect=float(np.max(np.abs(np.expm1(defect)))))


def _check_wealth(w: float) -> None:
    if not w > 0:
        raise DomainError(f"wealth must be positive, got {w}")


def power_value_pre(solution: PowerSolution, mp: MarketParams, t: float, w: float) -> float:
    """f(t) w^(1-gamma) / (1-gamma) e^{(1-gamma) r (T-t)}, with f linearly interpolated."""
    _check_wealth(w)
    T = solution.maturity
    if not 0 <= t <= T:
        raise DomainError(f"time {t} outside [0, {T}]")
    exponent = 1.0 - solution.gamma
    f_t = float(np.interp(t, solution.times, solution.f_path))
    return f_t * w**exponent / exponent * math.exp(exponent * mp.r * (T - t))


def power_value_post(mp: MarketParams, gamma: float, T: float, t: float, w: float, pi_at_t: float) -> float:
    """Power-utility value right after a default at t that hit a position with weight pi_at_t."""
    _check_wealth(w)
    if pi_at_t >= 1:
        raise InadmissiblePolicyError(f"weight {pi_at_t} >= 1 leaves no wealth after default")
    exponent = 1.0 - gamma
    return math.exp(exponent * mp.r * (T - t)) * w**exponent / exponent * (1.0 - pi_at_t) ** exponent


def linearized_weight(solution: PowerSolution, t):
    """First-order expansion pi_T - (T - t) kappa(pi_T) around maturity; t may be an array."""
    remaining = solution.maturity - np.asarray(t, dtype=float)
    if np.any(remaining < 0):
        raise DomainError(f"time {t} is after maturity {solution.maturity}")
    longest = float(np.max(remaining))
    if longest > config.LINEARIZATION_MAX_HORIZON:
        logger.warning(f"linearization used {longest:.3g} years before maturity, accuracy degrades")
    weights = solution.pi_T - remaining * solution.kappa_T
    return float(weights) if weights.ndim == 0 else weights


def power_fermat_residual(solution: PowerSolution) -> np.ndarray:
    """(mu - r - gamma sigma^2 pi_t) f(t) - lambda (1 - pi_t)^(-gamma) along the path."""
    mp, gamma = solution.market, solution.gamma
    pi, f = solution.weights, solution.f_path
    return (mp.excess_return - gamma * mp.variance * pi) * f - mp.lam * (1.0 - pi) ** (-gamma)


def power_h_function(mp: MarketParams, gamma: float, pi, f):
    """Reduced objective maximized over pi in the power-utility HJB equation."""
    pi = np.asarray(pi, dtype=float)
    exponent = 1.0 - gamma
    return (mp.excess_return * pi - 0.5 * gamma * mp.variance * pi * pi) * f + mp.lam * (1.0 - pi) ** exponent / exponent


def power_hjb_residual(solution: PowerSolution) -> float:
    """
    Max relative residual of
    f' + (1-gamma)((mu-r) pi - gamma sigma^2 pi^2 / 2) f - lambda f + lambda (1-pi)^(1-gamma) = 0
    over interior grid nodes, with f' from second-order central differences.
    """
    mp, gamma = solution.market, solution.gamma
    times, pi, f = solution.times, solution.weights, solution.f_path
    if times.size < 3:
        raise DomainError("the residual needs at least three grid nodes")
    exponent = 1.0 - gamma
    df = np.gradient(f, times, edge_order=2)
    growth = exponent * (mp.excess_return * pi - 0.5 * gamma * mp.variance * pi * pi) * f
    jump = mp.lam * (1.0 - pi) ** exponent
    residual = df + growth - mp.lam * f + jump
    scale = np.abs(df) + np.abs(growth) + mp.lam * np.abs(f) + jump
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(residual[1:-1]) / scale[1:-1]))
