"""Request/response models for the experiment service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..harness import ExperimentSpec, SolverSpec


class SolverRequest(BaseModel):
    name: Literal["idone-basic", "idone-advanced", "rs", "sa"]
    t0: float | None = None
    tf: float | None = None
    lam: float = Field(default=0.001, gt=0)
    p_explore: float | None = Field(default=None, ge=0.0, le=1.0)
    max_iters: int | None = Field(default=None, ge=1)

    def to_spec(self) -> SolverSpec:
        return SolverSpec(
            name=self.name,
            t0=self.t0,
            tf=self.tf,
            lam=self.lam,
            p_explore=self.p_explore,
            max_iters=self.max_iters,
        )


class ExperimentRequest(BaseModel):
    problem: Literal["four-city", "br17", "convex-binary", "atsp"]
    budget: int = Field(ge=1)
    out: str
    solvers: list[SolverRequest] = Field(min_length=1)
    replications: int = Field(default=1, ge=1)
    seed: int = 0
    d: int | None = Field(default=None, ge=1)
    instance: str | None = None
    workers: int = Field(default=1, ge=1)
    noise_high: float | None = Field(default=None, ge=0.0)
    tsp_replications: int = Field(default=100, ge=1)
    record_timing: bool = True

    def to_spec(self) -> ExperimentSpec:
        return ExperimentSpec(
            problem=self.problem,
            budget=self.budget,
            out=self.out,
            solvers=tuple(s.to_spec() for s in self.solvers),
            replications=self.replications,
            seed=self.seed,
            d=self.d,
            instance=self.instance,
            workers=self.workers,
            noise_high=self.noise_high,
            tsp_replications=self.tsp_replications,
            record_timing=self.record_timing,
        )


class RunStatusModel(BaseModel):
    solver: str
    replication: int
    seed: int
    ok: bool
    trace_path: str | None = None
    error: str | None = None
    final_best: float | None = None
    total_time_s: float | None = None


class SummaryRowModel(BaseModel):
    problem: str
    solver: str
    checkpoint: int
    n_runs: int
    best_min: float
    best_median: float
    best_mean: float
    best_max: float
    time_total_s_median: float


class ExperimentResponse(BaseModel):
    ok: bool
    runs: list[RunStatusModel]
    final_summary: list[SummaryRowModel]
    summary_csv: str
    curves_csv: str
    trace_files: list[str]
    issues: list[str]


class SummarizeRequest(BaseModel):
    trace_dir: str


class SummarizeResponse(BaseModel):
    rows: list[SummaryRowModel]
    issues: list[str]


class DumpModelRequest(BaseModel):
    problem: Literal["four-city", "atsp"] = "four-city"
    instance: str | None = None
    out: str
    resolution: float = Field(default=0.1, gt=0)
    lam: float = Field(default=0.001, gt=0)
    seed: int = 0
    noise_high: float = Field(default=0.0, ge=0.0)
    tsp_replications: int = Field(default=100, ge=1)


class DumpModelResponse(BaseModel):
    problem: str
    files: dict[str, str]
    grid_rows: int
    max_residual_basic: float
    max_residual_advanced: float


class ValidateInstanceRequest(BaseModel):
    path: str | None = None
    text: str | None = None


class ValidateInstanceResponse(BaseModel):
    ok: bool
    dimension: int | None = None
    forbidden_entries: int | None = None
    checksum: str | None = None
    error: str | None = None


class ProblemInfo(BaseModel):
    id: str
    kind: str
    d: int | None
    description: str
    lattice_size: float | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
