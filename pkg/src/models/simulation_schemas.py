from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class SimConfig(BaseModel):
    """Monte Carlo settings. Paths are drawn in chunks keyed by (seed, chunk index)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n_paths: int = Field(ge=1, description="Number of simulated paths.", examples=[100_000])
    seed: int = Field(default=42, ge=0, lt=2**64, description="Reproducibility seed.", examples=[42])
    scheme: Literal["gbm-exact"] = Field(
        default="gbm-exact",
        description="Log-space exact stepping of the wealth process between grid nodes.",
    )
    dt: float = Field(default=1.0 / 252.0, gt=0, description="Step in years for time-varying policies.")
    keep_paths: bool = Field(default=False, description="Store full wealth paths on the simulation grid.")


@dataclass(frozen=True)
class WealthTrajectory:
    """One simulated wealth path; tau is inf when default happens after maturity."""

    times: np.ndarray
    wealth: np.ndarray
    tau: float
    weights: np.ndarray

    @property
    def defaulted(self) -> bool:
        return bool(np.isfinite(self.tau))


@dataclass(frozen=True)
class SimulationBatch:
    """Per-path outcomes of one simulation; default-related fields are nan for surviving paths."""

    times: np.ndarray
    weights: np.ndarray
    terminal_wealth: np.ndarray
    tau: np.ndarray
    pre_jump_wealth: np.ndarray
    post_jump_wealth: np.ndarray
    default_weight: np.ndarray
    rate: float
    paths: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return int(self.terminal_wealth.size)

    @property
    def defaulted(self) -> np.ndarray:
        return np.isfinite(self.tau)

    def trajectories(self) -> list[WealthTrajectory]:
        """Materialize per-path trajectories; requires a run with keep_paths=True."""
        if self.paths is None:
            raise ValueError("full paths were not kept; rerun with keep_paths=True")
        result = []
        for i in range(self.n_paths):
            wealth = self.paths[i].copy()
            tau = float(self.tau[i])
            if np.isfinite(tau):
                after = self.times >= tau
                wealth[after] = self.post_jump_wealth[i] * np.exp(self.rate * (self.times[after] - tau))
            result.append(WealthTrajectory(times=self.times, wealth=wealth, tau=tau, weights=self.weights))
        return result


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    n_paths: int


class WeightStudyRow(BaseModel):
    pi: float
    admissible: bool
    mean: float | None = None
    stderr: float | None = None
    reason: str | None = None


class WeightStudy(BaseModel):
    """Monte Carlo objective of constant pre-default weights on a grid."""

    rows: list[WeightStudyRow]
    best_pi: float | None = Field(default=None, description="Admissible grid weight with the largest estimate.")
