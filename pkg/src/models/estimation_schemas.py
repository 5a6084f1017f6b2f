from datetime import date

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src import config
from src.models.market_schemas import MarketParams


class PriceSeries(BaseModel):
    """Daily closing prices with strictly ascending dates."""

    model_config = ConfigDict(frozen=True)

    dates: list[date] = Field(description="Trading dates, strictly ascending.")
    closes: list[float] = Field(description="Positive closing prices.")

    @model_validator(mode="after")
    def _check_series(self) -> "PriceSeries":
        if len(self.dates) != len(self.closes):
            raise ValueError(f"{len(self.dates)} dates but {len(self.closes)} closes")
        if len(self.closes) < 2:
            raise ValueError("a price series needs at least two observations")
        if any(later <= earlier for earlier, later in zip(self.dates, self.dates[1:], strict=False)):
            raise ValueError("dates must be strictly ascending")
        if any(not price > 0 for price in self.closes):
            raise ValueError("closing prices must be positive")
        return self


class EstimationResult(BaseModel):
    """Annualized drift and volatility estimates from daily log returns."""

    model_config = ConfigDict(frozen=True)

    mu_hat: float = Field(description="Annualized drift of log prices (1/year).", examples=[0.4027])
    sigma_hat: float = Field(ge=0, description="Annualized volatility (1/sqrt(year)).", examples=[0.5905])
    n: int = Field(ge=2, description="Number of log returns.", examples=[751])
    trading_days: int = Field(default=config.TRADING_DAYS, gt=0, description="Trading days per year.")


class AllocationRow(BaseModel):
    """Weight at maturity and linearization slope for one risk aversion."""

    gamma: float
    pi_terminal: float = Field(description="Pre-default weight at maturity.")
    slope: float = Field(description="kappa(pi_T); the weight is approximately pi_T - slope (T - t).")
    label: str = Field(examples=["0.53132 - 0.00449(T - t)"])
    admissible: bool = Field(
        default=True, description="False when no admissible optimum exists; pi_terminal is then the limiting weight."
    )


class AllocationReport(BaseModel):
    """Allocations implied by a set of market parameters, optionally estimated from prices."""

    estimation: EstimationResult | None = None
    market: MarketParams
    classical_ratio: float = Field(description="Classical Merton ratio for log utility.")
    pre_default_ratio: float = Field(description="Optimal pre-default weight for log utility.")
    post_default_ratio: float = Field(default=0.0, description="Stock weight after default.")
    rows: list[AllocationRow] = Field(default_factory=list)
