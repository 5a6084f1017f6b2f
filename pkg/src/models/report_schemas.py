import math
from enum import Enum
from typing import Any

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator, model_validator

from src import config
from src.models.market_schemas import MarketParams


class CommandName(str, Enum):
    RATIO = "ratio"
    PATH = "path"
    VALUE = "value"
    SIMULATE = "simulate"
    ESTIMATE = "estimate"
    REPRODUCE = "reproduce"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


DEFAULT_WEIGHT_GRID = [round(0.05 * i, 2) for i in range(21)]


class RunConfig(BaseModel):
    """Validated settings of one command run, shared by the CLI and the HTTP API."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, populate_by_name=True)

    command: CommandName
    mu: float = Field(default=0.4027, description="Annualized drift.")
    sigma: float = Field(default=0.5905, description="Annualized volatility.")
    r: float = Field(default=0.0501, description="Risk-free rate.")
    lam: float = Field(
        default=0.024,
        validation_alias=AliasChoices("lam", "lambda"),
        description="Default intensity.",
    )
    gamma: float = Field(default=1.0, gt=0, description="Relative risk aversion.")
    gammas: list[float] = Field(default_factory=lambda: [1.0, 1.5, 2.0, 2.5, 3.0])
    T: float = Field(default=1.0, gt=0, description="Maturity in years.")
    horizons: list[float] | None = Field(default=None, description="Maturities for the path command; defaults to [T].")
    steps: int | None = Field(default=None, ge=1, description="Grid steps; defaults to max(1000, ceil(1000 T)).")
    n_paths: int = Field(default=100_000, ge=1)
    seed: int = Field(default=42, ge=0, lt=2**64)
    dt: float = Field(default=1.0 / 252.0, gt=0)
    grid: list[float] = Field(default_factory=lambda: list(DEFAULT_WEIGHT_GRID))
    wealth: float = Field(default=1.0, gt=0)
    lambda_max: float = Field(default=1.0, gt=0)
    sweep_points: int = Field(default=101, ge=2)
    output_format: OutputFormat = OutputFormat.JSON
    out: str | None = None
    data: str | None = None
    precision: int = Field(default=config.DEFAULT_PRECISION, ge=1, le=17)

    @model_validator(mode="after")
    def _check_run(self) -> "RunConfig":
        MarketParams(mu=self.mu, sigma=self.sigma, r=self.r, lam=self.lam)
        if not self.gammas:
            raise ValueError("at least one gamma is required")
        if any(not gamma > 0 for gamma in self.gammas):
            raise ValueError("every gamma must be positive")
        if self.horizons is not None and (not self.horizons or any(not T > 0 for T in self.horizons)):
            raise ValueError("horizons must be a nonempty list of positive maturities")
        if not self.grid:
            raise ValueError("the weight grid is empty")
        return self

    @property
    def market(self) -> MarketParams:
        return MarketParams(mu=self.mu, sigma=self.sigma, r=self.r, lam=self.lam)

    @property
    def maturities(self) -> list[float]:
        return self.horizons or [self.T]


class SeriesTable(BaseModel):
    """A named table of rows, ready to plot or to write as CSV."""

    name: str = Field(examples=["lambda_sweep"])
    columns: list[str] = Field(examples=[["lambda", "pre_default_ratio"]])
    rows: list[list[Any]] = Field(default_factory=list)


class CheckResult(BaseModel):
    name: str
    passed: bool
    expected: float | None = None
    actual: float | None = None
    tolerance: float | None = None
    detail: str | None = None

    @field_validator("expected", "actual", "tolerance")
    @classmethod
    def _finite_or_null(cls, value: float | None) -> float | None:
        # JSON has no infinity; an unbounded or undefined figure is reported as null
        return value if value is None or math.isfinite(value) else None


class CommandReport(BaseModel):
    """Machine-readable output of every command."""

    command: CommandName
    inputs: dict[str, Any] = Field(default_factory=dict)
    results: dict[str, Any] = Field(default_factory=dict)
    checks: list[CheckResult] = Field(default_factory=list)
    series: list[SeriesTable] = Field(default_factory=list)
