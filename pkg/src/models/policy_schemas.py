from collections.abc import Callable
from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator

from src.models.market_schemas import MarketParams


def _as_float_array(value) -> np.ndarray:
    array = np.array(value, dtype=float, copy=True)
    if array.ndim != 1:
        raise ValueError("expected a one-dimensional array")
    array.flags.writeable = False
    return array


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda array: array.tolist(), return_type=list[float]),
]


class PolicyPath(BaseModel):
    """Pre-default stock weight on a time grid; the post-default weight is always 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: FloatArray = Field(description="Ascending time grid on [0, T] in years.")
    pre_weights: FloatArray = Field(description="Pre-default stock weight at each grid node.")
    post_weight: float = Field(default=0.0, description="Stock weight after default.")

    @model_validator(mode="after")
    def _check_path(self) -> "PolicyPath":
        times, weights = self.times, self.pre_weights
        if times.size < 2:
            raise ValueError("a policy path needs at least two grid nodes")
        if times.size != weights.size:
            raise ValueError(f"times ({times.size}) and pre_weights ({weights.size}) differ in length")
        if times[0] != 0.0:
            raise ValueError("policy grid must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("policy grid must be strictly ascending")
        if not np.all(np.isfinite(weights)):
            raise ValueError("policy weights must be finite")
        if self.post_weight != 0.0:
            raise ValueError("post-default weight must be 0")
        if np.max(weights) >= 1.0:
            raise ValueError(f"stock weight {np.max(weights)} >= 1 is not admissible")
        return self

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.pre_weights == self.pre_weights[0]))

    def weight_at(self, t):
        """Linearly interpolated pre-default weight at time(s) t."""
        return np.interp(t, self.times, self.pre_weights)


class LogSolution(BaseModel):
    """Closed-form solution for logarithmic utility over a fixed maturity."""

    model_config = ConfigDict(frozen=True)

    T: float = Field(gt=0, description="Maturity in years.")
    classical: float = Field(description="Classical Merton ratio (mu - r) / sigma^2.")
    # equals 1 only in the default-free limit with mu - r >= sigma^2
    pi_pre: float = Field(le=1, description="Optimal constant pre-default weight.")
    C_star: float = Field(description="Drift constant of the reduced value function (1/year).")
    value_fn: Callable[[float, float], float] = Field(
        exclude=True, description="(t, w) -> maximized expected log utility before default."
    )
    reduced_value_fn: Callable[[float, float], float] = Field(
        exclude=True, description="(t, x) -> minimized negative objective of the default-free reduction."
    )


class PowerConstants(BaseModel):
    """alpha is the classical Merton ratio; beta and eta shape the weight ODE."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(gt=0)
    alpha: float
    beta: float
    eta: float

    @model_validator(mode="after")
    def _check_identity(self) -> "PowerConstants":
        gap = (self.beta - self.alpha) - (1.0 - self.alpha) / (self.gamma + 1.0)
        if abs(gap) > 1e-12 * max(1.0, abs(self.alpha)):
            raise ValueError(f"beta - alpha identity violated by {gap}")
        return self


class PsiConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    d1: float | None = None
    d2: float | None = None
    D: float | None = None
    Delta: float
    q_minus: float | None = None
    q_plus: float | None = None
    available: bool
    reason: str | None = None


class PowerSolution(BaseModel):
    """Non-myopic weight path for power utility together with f(t) on the same grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    market: MarketParams
    gamma: float = Field(gt=0)
    pi_T: float = Field(lt=1, description="Weight at maturity, the root of phi.")
    path: PolicyPath
    f_path: FloatArray = Field(description="f(t) on the path grid, f(T) = 1.")
    constants: PowerConstants
    kappa_T: float = Field(description="Time derivative of the weight at maturity.")
    routed_to_log: bool = Field(default=False, description="True when gamma was close enough to 1 to use the log solution.")

    @model_validator(mode="after")
    def _check_solution(self) -> "PowerSolution":
        if self.f_path.size != self.path.times.size:
            raise ValueError("f_path must share the policy grid")
        if abs(self.f_path[-1] - 1.0) > 1e-10:
            raise ValueError(f"f(T) = {self.f_path[-1]}, expected 1")
        return self

    @property
    def times(self) -> np.ndarray:
        return self.path.times

    @property
    def weights(self) -> np.ndarray:
        return self.path.pre_weights

    @property
    def maturity(self) -> float:
        return self.path.maturity


class PsiCheck(BaseModel):
    """Outcome of comparing the integrated path against the implicit closed-form solution."""

    available: bool
    max_defect: float | None = Field(default=None, description="Max relative defect over the grid.")
    reason: str | None = None
