import math
from enum import Enum

import numpy as np
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationInfo, computed_field, field_validator

from src import config


class MarketParams(BaseModel):
    """Drift, volatility, risk-free rate and default intensity of the market, all annualized."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, populate_by_name=True)

    mu: float = Field(
        description="Annualized drift of the stock (1/year).",
        examples=[0.4027],
    )
    sigma: float = Field(
        gt=0,
        description="Annualized volatility of the stock (1/sqrt(year)).",
        examples=[0.5905],
    )
    r: float = Field(
        ge=0,
        description="Annualized continuously compounded risk-free rate (1/year).",
        examples=[0.0501],
    )
    lam: float = Field(
        ge=0,
        validation_alias=AliasChoices("lam", "lambda"),
        serialization_alias="lambda",
        description="Intensity of the exponential default time (1/year).",
        examples=[0.024],
    )

    @property
    def excess_return(self) -> float:
        return self.mu - self.r

    @property
    def variance(self) -> float:
        return self.sigma * self.sigma

    def with_intensity(self, lam: float) -> "MarketParams":
        return self.model_copy(update={"lam": lam})


class UtilityKind(str, Enum):
    LOG = "log"
    POWER = "power"


class UtilitySpec(BaseModel):
    """Isoelastic utility with relative risk aversion gamma; gamma = 1 is logarithmic."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    gamma: float = Field(
        gt=0,
        description="Relative risk aversion (dimensionless).",
        examples=[1.0, 2.0],
    )

    @computed_field
    @property
    def kind(self) -> UtilityKind:
        if abs(self.gamma - 1.0) <= config.LOG_UTILITY_TOL:
            return UtilityKind.LOG
        return UtilityKind.POWER

    @property
    def is_log(self) -> bool:
        return self.kind is UtilityKind.LOG


class Horizon(BaseModel):
    """Investment maturity and the grid count used by every discretization."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    T: float = Field(
        gt=0,
        description="Maturity in years.",
        examples=[1.0, 10.0, 30.0],
    )
    n_steps: int | None = Field(
        default=None,
        validate_default=True,
        description="Number of grid steps on [0, T]; defaults to max(1000, ceil(1000 T)).",
        examples=[1000],
    )

    @field_validator("n_steps")
    @classmethod
    def _default_steps(cls, value: int | None, info: ValidationInfo) -> int:
        if value is None:
            maturity = info.data.get("T", 1.0)
            return max(1000, math.ceil(1000 * maturity))
        if value < 1:
            raise ValueError("n_steps must be at least 1")
        return value

    @property
    def step(self) -> float:
        return self.T / self.n_steps

    def grid(self) -> np.ndarray:
        """Uniform time grid with n_steps + 1 nodes from 0 to T."""
        times = np.linspace(0.0, self.T, self.n_steps + 1)
        times[-1] = self.T
        return times
