import logging
import math

import numpy as np

from src.errors import DomainError, InadmissiblePolicyError
from src.models.market_schemas import Horizon, UtilitySpec
from src.models.policy_schemas import PolicyPath

logger = logging.getLogger(__name__)


def utility(spec: UtilitySpec, w: float) -> float:
    """
    Normalized isoelastic utility (w^(1-gamma) - 1) / (1 - gamma), log(w) for gamma = 1.

    The -1/(1-gamma) offset keeps the family continuous in gamma. The power-utility
    value functions drop it, so V_pre there equals E[utility] + 1/(1-gamma).
    """
    if not w > 0:
        raise DomainError(f"utility is undefined for nonpositive wealth {w}")
    if spec.is_log:
        return math.log(w)
    exponent = 1.0 - spec.gamma
    return math.expm1(exponent * math.log(w)) / exponent


def utility_array(spec: UtilitySpec, wealth: np.ndarray) -> np.ndarray:
    """Vectorized utility; nonpositive wealth maps to -inf instead of raising."""
    wealth = np.asarray(wealth, dtype=float)
    values = np.full(wealth.shape, -np.inf)
    positive = wealth > 0
    log_w = np.log(wealth[positive])
    if spec.is_log:
        values[positive] = log_w
    else:
        exponent = 1.0 - spec.gamma
        values[positive] = np.expm1(exponent * log_w) / exponent
    return values


def certainty_equivalent(spec: UtilitySpec, value: float) -> float:
    """Wealth whose normalized utility equals value."""
    if spec.is_log:
        return math.exp(value)
    exponent = 1.0 - spec.gamma
    base = 1.0 + exponent * value
    if base <= 0:
        # value lies above the utility's supremum (gamma > 1) or below its infimum
        return math.inf if exponent < 0 else 0.0
    return math.exp(math.log1p(exponent * value) / exponent)


def wealth_given_default(x_at_tau: float, pi_at_tau_minus: float, r: float, t: float, tau: float) -> float:
    """Wealth at t >= tau: the stock share is lost at tau and the remainder accrues at r."""
    if pi_at_tau_minus >= 1:
        raise InadmissiblePolicyError(f"weight {pi_at_tau_minus} >= 1 wipes out wealth at default")
    if not x_at_tau > 0:
        raise DomainError(f"wealth at default must be positive, got {x_at_tau}")
    if t < tau:
        raise DomainError(f"evaluation time {t} precedes the default time {tau}")
    return math.exp(r * (t - tau)) * (1.0 - pi_at_tau_minus) * x_at_tau


def ensure_admissible(weights) -> None:
    weights = np.asarray(weights, dtype=float)
    if weights.size and np.max(weights) >= 1:
        raise InadmissiblePolicyError(f"stock weight {np.max(weights)} >= 1 is not admissible")


def constant_policy(value: float, horizon: Horizon) -> PolicyPath:
    """A policy holding the same pre-default weight on [0, T]."""
    ensure_admissible([value])
    return PolicyPath(times=[0.0, horizon.T], pre_weights=[value, value])


def policy_from_weights(times, weights) -> PolicyPath:
    ensure_admissible(weights)
    return PolicyPath(times=times, pre_weights=weights)
