from pydantic import AliasChoices, BaseModel, Field


class HealthResponse(BaseModel):
    message: str
    status: int
    dataset_available: bool = Field(default=False, description="Whether the default price dataset is on disk.")


class CommandInfo(BaseModel):
    """Info about an available computation."""

    key: str = Field(
        description="Command key.",
        examples=["ratio"],
    )
    description: str = Field(
        description="What the command computes.",
        examples=["Classical and pre-default Merton ratios."],
    )
    http: bool = Field(
        default=False,
        description="Whether the command is also served over HTTP.",
    )


class ServiceMetadata(BaseModel):
    """Metadata about the service including available commands and default inputs."""

    commands: list[CommandInfo] = Field(
        description="List of available commands.",
    )
    defaults: dict[str, float | int] = Field(
        description="Default market parameters and numerical settings.",
        examples=[{"mu": 0.4027, "sigma": 0.5905, "r": 0.0501, "lambda": 0.024}],
    )


class AllocationRequest(BaseModel):
    """Inputs for the allocation endpoints; omitted fields take the command defaults."""

    mu: float | None = Field(default=None, examples=[0.4027])
    sigma: float | None = Field(default=None, examples=[0.5905])
    r: float | None = Field(default=None, examples=[0.0501])
    lam: float | None = Field(
        default=None,
        validation_alias=AliasChoices("lam", "lambda"),
        examples=[0.024],
    )
    gamma: float | None = Field(default=None, examples=[2.0])
    gammas: list[float] | None = Field(default=None, examples=[[1.5, 2.0]])
    T: float | None = Field(default=None, examples=[1.0])
    horizons: list[float] | None = Field(default=None, examples=[[1.0, 10.0]])
    steps: int | None = Field(default=None, examples=[1000])
    wealth: float | None = Field(default=None, examples=[1.0])
    lambda_max: float | None = Field(default=None, examples=[1.0])
    sweep_points: int | None = Field(default=None, examples=[101])
