"""
Closed-form results for logarithmic utility.

Two sign conventions coexist: `log_value_function_pre` is the maximized expected log
utility of terminal wealth, `log_value_function_reduced` is the minimized negative
objective of the default-free reduction, in which the default time is integrated out.
At t = 0 the two agree up to sign; `reduced_to_pre` converts between them for any t.
"""

import logging
import math
from functools import partial

import numpy as np

from src.errors import DomainError, IllPosedProblemError, InadmissiblePolicyError, RootNotFoundError
from src.models.market_schemas import MarketParams
from src.models.policy_schemas import LogSolution

logger = logging.getLogger(__name__)

BELOW_ONE = float(np.nextafter(1.0, 0.0))


def _lambda_zero_ratio(mp: MarketParams) -> float:
    return min(mp.excess_return / mp.variance, 1.0)


def smaller_quadratic_root(a: float, b: float, c: float) -> float:
    """Smaller real root of a x^2 + b x + c with a > 0, without cancellation."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        # rounding can push a double root slightly negative
        if disc < -1e-14 * (b * b + abs(4.0 * a * c)):
            raise RootNotFoundError(f"quadratic has no real root (discriminant {disc})")
        disc = 0.0
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return 0.0
    return min(q / a, c / q)


def classical_merton_ratio(mp: MarketParams, gamma: float) -> float:
    if not gamma > 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    return mp.excess_return / (gamma * mp.variance)


def pre_default_ratio_log(mp: MarketParams) -> float:
    """
    Optimal constant pre-default weight for log utility.

    Smaller root of sigma^2 pi^2 - (mu - r + sigma^2) pi + (mu - r - lambda). For
    lambda > 0 the polynomial is negative at pi = 1, so the root is below 1; for
    lambda = 0 it is min((mu - r) / sigma^2, 1).
    """
    if mp.lam == 0:
        return _lambda_zero_ratio(mp)
    excess = mp.excess_return
    root = smaller_quadratic_root(mp.variance, -(excess + mp.variance), excess - mp.lam)
    # rounding near a double root at 1 must not leave the admissible region
    return min(root, BELOW_ONE)


def log_first_order_residual(mp: MarketParams, pi: float) -> float:
    """(mu - r) - pi sigma^2 - lambda / (1 - pi); zero at the optimal pre-default weight."""
    if pi >= 1:
        raise InadmissiblePolicyError(f"weight {pi} >= 1 is not admissible")
    return mp.excess_return - pi * mp.variance - mp.lam / (1.0 - pi)


def pre_default_ratio_sweep(mp: MarketParams, lambda_max: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Pre-default log ratio on k evenly spaced intensities from 0 to lambda_max."""
    if k < 2:
        raise DomainError(f"a sweep needs at least 2 points, got {k}")
    if not lambda_max > 0:
        raise DomainError(f"lambda_max must be positive, got {lambda_max}")
    intensities = np.linspace(0.0, lambda_max, k)
    ratios = np.array([pre_default_ratio_log(mp.with_intensity(float(lam))) for lam in intensities])
    return intensities, ratios


def hjb_objective(mp: MarketParams, t: float, x: float, pi: float, p: float, A: float) -> float:
    """g(t, x, pi, p, A): the quantity minimized over pi < 1 in the reduced HJB equation."""
    if pi >= 1:
        return math.inf
    value = (mp.mu * pi + mp.r * (1.0 - pi)) * x * p + 0.5 * mp.variance * pi * pi * x * x * A
    if mp.lam > 0:
        value -= mp.lam * math.exp(-mp.lam * t) * math.log((1.0 - pi) * x)
    return value


def hjb_pointwise_minimizer(mp: MarketParams, t: float, x: float, p: float, A: float) -> float:
    """
    Minimizer over pi < 1 of the reduced HJB objective for given derivative values.

    First-order condition times (1 - pi) is the quadratic
    a pi^2 + b pi + c = 0 with a = sigma^2 x^2 A, b = (mu - r) x p - a and
    c = -((mu - r) x p + lambda e^{-lambda t}); its smaller root is the minimizer.
    """
    if not x > 0:
        raise DomainError(f"wealth must be positive, got {x}")
    if not A > 0:
        raise IllPosedProblemError(f"second derivative A = {A} <= 0, the HJB operator is undefined")
    a = mp.variance * x * x * A
    slope = mp.excess_return * x * p
    c = -(slope + mp.lam * math.exp(-mp.lam * t))
    return smaller_quadratic_root(a, slope - a, c)


def hjb_operator(mp: MarketParams, t: float, x: float, p: float, A: float) -> float:
    pi = hjb_pointwise_minimizer(mp, t, x, p, A)
    return hjb_objective(mp, t, x, pi, p, A)


def reduced_drift_constant(mp: MarketParams) -> float:
    """C* = mu pi + r (1 - pi) - sigma^2 pi^2 / 2 + lambda log(1 - pi) at the optimal pi."""
    if mp.lam == 0:
        pi = _lambda_zero_ratio(mp)
        return mp.r + pi * mp.excess_return - 0.5 * mp.variance * pi * pi
    pi = pre_default_ratio_log(mp)
    return mp.mu * pi + mp.r * (1.0 - pi) - 0.5 * mp.variance * pi * pi + mp.lam * math.log1p(-pi)


def _check_time(T: float, t: float) -> None:
    if not 0 <= t <= T:
        raise DomainError(f"time {t} outside [0, {T}]")


def log_value_function_pre(mp: MarketParams, T: float, t: float, w: float) -> float:
    """
    Maximized expected log utility of terminal wealth, given no default by t and wealth w.

    log w + r s + K (1 - e^{-lambda s}) / lambda + log(1 - pi) (1 - e^{-lambda s}) with
    s = T - t and K = pi (mu - r) - sigma^2 pi^2 / 2; lambda = 0 uses the continuous limit.
    """
    _check_time(T, t)
    if not w > 0:
        raise DomainError(f"wealth must be positive, got {w}")
    remaining = T - t
    if mp.lam == 0:
        pi = _lambda_zero_ratio(mp)
        drift = pi * mp.excess_return - 0.5 * mp.variance * pi * pi
        return math.log(w) + (mp.r + drift) * remaining
    pi = pre_default_ratio_log(mp)
    drift = pi * mp.excess_return - 0.5 * mp.variance * pi * pi
    survival_gap = -math.expm1(-mp.lam * remaining)
    return math.log(w) + mp.r * remaining + drift * survival_gap / mp.lam + math.log1p(-pi) * survival_gap


def log_post_value(mp: MarketParams, T: float, t: float, w: float, pi_at_t: float) -> float:
    """Expected log utility after a default at t that hit a position with weight pi_at_t."""
    _check_time(T, t)
    if pi_at_t >= 1:
        raise InadmissiblePolicyError(f"weight {pi_at_t} >= 1 leaves no wealth after default")
    if not w > 0:
        raise DomainError(f"wealth must be positive, got {w}")
    return math.log(w) + math.log1p(-pi_at_t) + mp.r * (T - t)


def log_value_function_reduced(mp: MarketParams, T: float, t: float, x: float) -> float:
    """
    Value of the default-free minimization problem.

    -e^{-lambda t} log x - C*/lambda (e^{-lambda t} - e^{-lambda T}) - r (T - (1 - e^{-lambda T}) / lambda);
    for lambda = 0 the limit -log x - C0 (T - t).
    """
    _check_time(T, t)
    if not x > 0:
        raise DomainError(f"wealth must be positive, got {x}")
    C = reduced_drift_constant(mp)
    if mp.lam == 0:
        return -math.log(x) - C * (T - t)
    lam = mp.lam
    decay = math.exp(-lam * t)
    discount_gap = decay * -math.expm1(-lam * (T - t))
    annuity = -math.expm1(-lam * T) / lam
    return -decay * math.log(x) - C / lam * discount_gap - mp.r * (T - annuity)


def log_value_derivatives(mp: MarketParams, T: float, t: float, x: float) -> tuple[float, float, float]:
    """Analytic (dV/dt, dV/dx, d2V/dx2) of the reduced value function."""
    _check_time(T, t)
    if not x > 0:
        raise DomainError(f"wealth must be positive, got {x}")
    C = reduced_drift_constant(mp)
    decay = math.exp(-mp.lam * t)
    dt = mp.lam * decay * math.log(x) + C * decay
    return dt, -decay / x, decay / (x * x)


def reduced_to_pre(mp: MarketParams, T: float, t: float, reduced_value: float) -> float:
    """Map a reduced (minimization) value at (t, x) to the pre-default value at wealth x."""
    if mp.lam == 0:
        return -reduced_value
    decay = math.exp(-mp.lam * t)
    accrual = mp.r * (-math.expm1(-mp.lam * t) / mp.lam - T + decay * (T - t))
    return (accrual - reduced_value) / decay


def total_value_mixture(v_pre: float, v_post: float, lam: float, t: float) -> float:
    """
    Unconditional value at t: survival-weighted mix of the pre and post default values.

    P(tau > t) = e^{-lambda t} weights v_pre; the complement weights v_post.
    """
    if lam < 0 or t < 0:
        raise DomainError(f"need lambda >= 0 and t >= 0, got lambda={lam}, t={t}")
    if lam == 0 or t == 0:
        return v_pre
    survival = math.exp(-lam * t)
    if survival == 0.0:
        return v_post
    return survival * v_pre + (1.0 - survival) * v_post


def solve_log(mp: MarketParams, T: float) -> LogSolution:
    classical = classical_merton_ratio(mp, 1.0)
    pi_pre = pre_default_ratio_log(mp)
    logger.debug(f"log solution: classical={classical:.6g}, pre-default={pi_pre:.6g}")
    return LogSolution(
        T=T,
        classical=classical,
        pi_pre=pi_pre,
        C_star=reduced_drift_constant(mp),
        value_fn=partial(log_value_function_pre, mp, T),
        reduced_value_fn=partial(log_value_function_reduced, mp, T),
    )
