"""FastAPI service exposing the experiment harness.

Experiments run synchronously inside the request; desk-scale studies take
seconds to minutes, so clients should use generous timeouts. Trace and
summary files are written on the service side, under the output directory
named in the request.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__, harness, problems
from . import schemas

app = FastAPI(title="idone service", version=__version__)


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.get("/problems", response_model=list[schemas.ProblemInfo])
def list_problems() -> list[schemas.ProblemInfo]:
    four = problems.make_four_city_problem()
    br17 = problems.make_br17_problem()
    return [
        schemas.ProblemInfo(
            id="four-city",
            kind="atsp",
            d=four.d,
            description="4-city TSP from the model-visualization example; noiseless by default, "
            "optima (1,2) and (2,2) with route length 80",
            lattice_size=four.metadata["lattice_size"],
        ),
        schemas.ProblemInfo(
            id="br17",
            kind="atsp",
            d=br17.d,
            description="TSPLIB br17 with per-edge uniform noise; objective is the worst route "
            "length over 100 replications",
            lattice_size=br17.metadata["lattice_size"],
        ),
        schemas.ProblemInfo(
            id="convex-binary",
            kind="convex-binary",
            d=None,
            description="random convex quadratic over d binary variables with known optimum and "
            "uniform [0,1] measurement noise; instances regenerate per replication",
            lattice_size=None,
        ),
        schemas.ProblemInfo(
            id="atsp",
            kind="atsp",
            d=None,
            description="any TSPLIB explicit full-matrix ATSP instance, supplied by path",
            lattice_size=None,
        ),
    ]


@app.post("/experiments/run", response_model=schemas.ExperimentResponse)
def run_experiment(request: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
    try:
        spec = request.to_spec()
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    try:
        result = harness.run_experiment(spec)
    except (OSError, problems.TsplibFormatError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return schemas.ExperimentResponse(
        ok=result.ok,
        runs=[schemas.RunStatusModel(**vars(s)) for s in result.runs],
        final_summary=[schemas.SummaryRowModel(**vars(r)) for r in result.summary.final_rows()],
        summary_csv=result.summary_path,
        curves_csv=result.curves_path,
        trace_files=result.trace_paths,
        issues=result.issues,
    )


@app.post("/summaries", response_model=schemas.SummarizeResponse)
def summarize(request: schemas.SummarizeRequest) -> schemas.SummarizeResponse:
    try:
        table, issues = harness.summarize(request.trace_dir)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    return schemas.SummarizeResponse(
        rows=[schemas.SummaryRowModel(**vars(r)) for r in table.rows],
        issues=issues,
    )


@app.post("/models/dump", response_model=schemas.DumpModelResponse)
def dump_model(request: schemas.DumpModelRequest) -> schemas.DumpModelResponse:
    try:
        if request.problem == "four-city":
            problem = problems.make_four_city_problem(
                replications=request.tsp_replications, noise_high=request.noise_high
            )
        else:
            if not request.instance:
                raise HTTPException(status_code=400, detail="atsp dump needs an instance path")
            matrix = problems.parse_tsplib_atsp(Path(request.instance).read_text())
            problem = problems.make_atsp_problem(
                matrix,
                Path(request.instance).stem,
                replications=request.tsp_replications,
                noise_high=request.noise_high,
            )
        dump = harness.dump_model(problem, resolution=request.resolution, lam=request.lam, seed=request.seed)
    except (ValueError, OSError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    files = harness.write_model_dump(dump, request.out)
    return schemas.DumpModelResponse(
        problem=problem.id,
        files=files,
        grid_rows=len(dump.grid),
        max_residual_basic=dump.max_residual_basic,
        max_residual_advanced=dump.max_residual_advanced,
    )


@app.post("/instances/validate", response_model=schemas.ValidateInstanceResponse)
def validate_instance(request: schemas.ValidateInstanceRequest) -> schemas.ValidateInstanceResponse:
    if (request.path is None) == (request.text is None):
        raise HTTPException(status_code=400, detail="provide exactly one of 'path' or 'text'")
    try:
        text = Path(request.path).read_text() if request.path else request.text
    except OSError as exc:
        return schemas.ValidateInstanceResponse(ok=False, error=str(exc))
    try:
        matrix = problems.parse_tsplib_atsp(text)
    except problems.TsplibFormatError as exc:
        return schemas.ValidateInstanceResponse(ok=False, error=str(exc))
    return schemas.ValidateInstanceResponse(
        ok=True,
        dimension=matrix.n,
        forbidden_entries=int(matrix.forbidden.sum()),
        checksum=matrix.checksum(),
    )
