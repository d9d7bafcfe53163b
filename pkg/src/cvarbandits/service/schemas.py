"""Request and response models of the HTTP service.

The JSON field for the decay rate is named ``lambda`` (the Python-side
attribute is ``lam``); unknown request fields are rejected.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..harness import DEFAULT_GRID, DEFAULT_LAMBDAS, ExperimentConfig
from ..policy import METHODS

MethodName = Literal["sample_average", "weighted_empirical", "dual_recursive"]


class ExperimentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    runs: int = 1000
    stages: int = 2000
    arms: int = 8
    alpha: float = 0.90
    epsilon: float = 0.05
    lambdas: list[float] = Field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    methods: list[MethodName] = Field(default_factory=lambda: list(METHODS))
    grid: tuple[float, float, int] = DEFAULT_GRID
    master_seed: int = 0
    workers: int = 1
    share_exploration: bool = True

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            runs=self.runs,
            stages=self.stages,
            arms=self.arms,
            alpha=self.alpha,
            epsilon=self.epsilon,
            lambdas=tuple(self.lambdas),
            methods=tuple(self.methods),
            grid=tuple(self.grid),
            master_seed=self.master_seed,
            workers=self.workers,
            share_exploration=self.share_exploration,
        )


class SimulateRequest(ExperimentRequest):
    collect_per_run: bool = False
    trace_run: Optional[int] = None


class FinalMetrics(BaseModel):
    hit_rate_T: float
    avg_regret_T: float
    empirical_cvar_T: float


class CellSeries(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    method: str
    lam: float = Field(alias="lambda")
    hit_rate: list[float]
    avg_regret: list[float]
    empirical_cvar: list[float]
    finals: FinalMetrics


class RunCellSeries(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    method: str
    lam: float = Field(alias="lambda")
    run: int
    hit_rate: list[float]
    avg_regret: list[float]
    empirical_cvar: list[float]


class TraceRow(BaseModel):
    stage: int
    arm: int
    true_cvar: float
    is_optimal: int


class SimulateResponse(BaseModel):
    config: dict
    cells: list[CellSeries]
    per_run: Optional[list[RunCellSeries]] = None
    trace: Optional[list[TraceRow]] = None


class SweepRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    method: str
    lam: float = Field(alias="lambda")
    hit_rate_T: float
    avg_regret_T: float
    empirical_cvar_T: float


class SweepResponse(BaseModel):
    config: dict
    rows: list[SweepRow]


class EstimateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    losses: list[float] = Field(min_length=1)
    method: MethodName = "sample_average"
    alpha: float = 0.9
    lam: float = Field(0.5, alias="lambda")
    grid: tuple[float, float, int] = DEFAULT_GRID


class EstimateResponse(BaseModel):
    estimate: float
    argmin_c: Optional[float] = None
    observations: int
