"""Experiment orchestration: seeded replications, trace files and summaries.

A replication r of an experiment runs every configured solver with the same
run seed (base seed + r), which gives all of them the same initial point and
the same problem-noise sequence. Generated problem instances are re-derived
per replication from a dedicated substream, so workers need no shared state
and results are identical whether runs execute serially or in parallel.
"""

from __future__ import annotations

import csv
import os
import statistics
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import problems, solver
from .fitting import rls_init, rls_update
from .model_min import MinimizeOptions
from .surrogate import SurrogateModel

PROBLEM_KINDS = ("four-city", "br17", "convex-binary", "atsp")
SOLVER_NAMES = ("idone-basic", "idone-advanced", "rs", "sa")

# Cooling defaults per problem family, used when a spec does not set them.
SA_DEFAULTS = {"tsp": (4.48, 0.996), "binary": (1.0, 0.95)}


@dataclass(frozen=True)
class SolverSpec:
    name: str
    t0: float | None = None
    tf: float | None = None
    lam: float = 0.001
    p_explore: float | None = None
    max_iters: int | None = None

    def __post_init__(self):
        if self.name not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {self.name!r}, expected one of {SOLVER_NAMES}")


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    budget: int
    out: str
    solvers: tuple[SolverSpec, ...]
    replications: int = 1
    seed: int = 0
    d: int | None = None
    instance: str | None = None
    workers: int = 1
    noise_high: float | None = None
    tsp_replications: int = 100
    record_timing: bool = True

    def __post_init__(self):
        if self.problem not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem {self.problem!r}, expected one of {PROBLEM_KINDS}")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        if self.problem == "convex-binary" and (self.d is None or self.d < 1):
            raise ValueError("convex-binary needs a positive dimension d")
        if self.problem == "atsp" and not self.instance:
            raise ValueError("atsp needs an instance path")


@dataclass
class RunStatus:
    solver: str
    replication: int
    seed: int
    ok: bool
    trace_path: str | None = None
    error: str | None = None
    final_best: float | None = None
    total_time_s: float | None = None


@dataclass(frozen=True)
class SummaryRow:
    problem: str
    solver: str
    checkpoint: int
    n_runs: int
    best_min: float
    best_median: float
    best_mean: float
    best_max: float
    time_total_s_median: float


@dataclass
class SummaryTable:
    rows: list[SummaryRow] = field(default_factory=list)

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "problem",
                    "solver",
                    "checkpoint",
                    "n_runs",
                    "best_min",
                    "best_median",
                    "best_mean",
                    "best_max",
                    "time_total_s_median",
                ]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.problem,
                        r.solver,
                        r.checkpoint,
                        r.n_runs,
                        repr(r.best_min),
                        repr(r.best_median),
                        repr(r.best_mean),
                        repr(r.best_max),
                        repr(r.time_total_s_median),
                    ]
                )
        return path

    def final_rows(self) -> list[SummaryRow]:
        last = max((r.checkpoint for r in self.rows), default=0)
        return [r for r in self.rows if r.checkpoint == last]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    summary: SummaryTable
    runs: list[RunStatus]
    trace_paths: list[str]
    summary_path: str
    curves_path: str
    issues: list[str]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.runs)


def sa_defaults_for(problem_kind: str) -> tuple[float, float]:
    return SA_DEFAULTS["binary" if problem_kind == "convex-binary" else "tsp"]


def build_problem(spec: ExperimentSpec, replication: int) -> problems.Problem:
    """Instantiate the problem a replication runs against.

    TSP instances are fixed across replications; convex-binary draws a fresh
    (A, x*) from the replication seed's problem substream.
    """
    seed_r = spec.seed + replication
    if spec.problem == "four-city":
        noise = 0.0 if spec.noise_high is None else spec.noise_high
        return problems.make_four_city_problem(replications=spec.tsp_replications, noise_high=noise)
    if spec.problem == "br17":
        noise = 1.0 if spec.noise_high is None else spec.noise_high
        return problems.make_br17_problem(replications=spec.tsp_replications, noise_high=noise)
    if spec.problem == "atsp":
        noise = 1.0 if spec.noise_high is None else spec.noise_high
        matrix = problems.parse_tsplib_atsp(Path(spec.instance).read_text())
        # trace filenames are underscore-delimited, so the id must not add any
        problem_id = Path(spec.instance).stem.replace("_", "-")
        return problems.make_atsp_problem(
            matrix, problem_id, replications=spec.tsp_replications, noise_high=noise
        )
    noise = 1.0 if spec.noise_high is None else spec.noise_high
    instance = problems.generate_convex_binary(spec.d, solver.problem_rng(seed_r))
    return problems.make_convex_binary_problem(instance, noise_high=noise)


def _run_one(
    spec: ExperimentSpec, solver_spec: SolverSpec, replication: int, write_instance_record: bool = False
) -> RunStatus:
    seed_r = spec.seed + replication
    status = RunStatus(solver=solver_spec.name, replication=replication, seed=seed_r, ok=False)
    try:
        problem = build_problem(spec, replication)
        if spec.problem == "convex-binary" and write_instance_record:
            # Re-derives the replication's instance; one designated job per
            # replication writes it so parallel workers never share a file.
            record = problems.quadratic_to_csv(
                problems.generate_convex_binary(spec.d, solver.problem_rng(seed_r)), seed=seed_r
            )
            instances_dir = Path(spec.out) / "instances"
            instances_dir.mkdir(parents=True, exist_ok=True)
            (instances_dir / f"{problem.id}_{seed_r}.csv").write_text(record)
        trace = _dispatch_solver(problem, solver_spec, spec, seed_r)
        path = Path(spec.out) / trace.filename()
        trace.write_csv(path, record_timing=spec.record_timing)
        status.ok = True
        status.trace_path = str(path)
        status.final_best = trace.final_best
        status.total_time_s = sum(trace.time_ms) / 1e3
    except Exception as exc:  # noqa: BLE001 - a failed run must not kill the experiment
        status.error = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
    return status


def _dispatch_solver(problem, solver_spec: SolverSpec, spec: ExperimentSpec, seed_r: int):
    name = solver_spec.name
    if name in ("idone-basic", "idone-advanced"):
        config = solver.SolverConfig(
            budget=spec.budget,
            rng_seed=seed_r,
            variant=name.removeprefix("idone-"),
            p_explore=solver_spec.p_explore,
            lam=solver_spec.lam,
            minimize_options=MinimizeOptions(max_iters=solver_spec.max_iters),
        )
        return solver.run_idone(problem, config)
    if name == "rs":
        return solver.run_random_search(problem, spec.budget, seed_r)
    t0_default, tf_default = sa_defaults_for(spec.problem)
    config = solver.SaConfig(
        budget=spec.budget,
        rng_seed=seed_r,
        t0=solver_spec.t0 if solver_spec.t0 is not None else t0_default,
        tf=solver_spec.tf if solver_spec.tf is not None else tf_default,
        p_explore=solver_spec.p_explore,
    )
    return solver.run_simulated_annealing(problem, config)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every (solver, replication) pair and write traces plus summaries.

    Individual run failures are recorded in the result instead of aborting
    the experiment. The summary table is recomputed from the written trace
    files, so it is exactly what ``summarize`` would report.
    """
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [
        (s, r, idx == 0)
        for r in range(spec.replications)
        for idx, s in enumerate(spec.solvers)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers, mp_context=get_context("spawn")) as pool:
            futures = [pool.submit(_run_one, spec, s, r, first) for s, r, first in jobs]
            statuses = [f.result() for f in futures]
    else:
        statuses = [_run_one(spec, s, r, first) for s, r, first in jobs]

    summary, issues = summarize(out)
    summary_path = summary.write_csv(out / "summary.csv")
    curves_path = _write_curves(out)
    return ExperimentResult(
        spec=spec,
        summary=summary,
        runs=statuses,
        trace_paths=[s.trace_path for s in statuses if s.trace_path],
        summary_path=str(summary_path),
        curves_path=str(curves_path),
        issues=issues,
    )


def _trace_files(trace_dir: Path) -> list[Path]:
    skip = {"summary.csv", "curves.csv"}
    return sorted(p for p in trace_dir.glob("*.csv") if p.name not in skip)


def load_traces(trace_dir) -> tuple[list[solver.RunTrace], list[str]]:
    """Read every trace in a directory; report unreadable or corrupt ones.

    A trace whose best-so-far column ever increases violates the format's
    core invariant and is flagged and skipped rather than aggregated.
    """
    traces = []
    issues = []
    for path in _trace_files(Path(trace_dir)):
        try:
            trace = solver.RunTrace.read_csv(path)
        except (ValueError, OSError) as exc:
            issues.append(f"{path.name}: {exc}")
            continue
        best = np.array(trace.best_y)
        if not (np.all(np.isfinite(best)) and np.all(np.isfinite(trace.time_ms))):
            issues.append(f"{path.name}: integrity error, non-finite best_y or time_ms")
            continue
        if np.any(np.diff(best) > 0):
            issues.append(f"{path.name}: integrity error, best_y increases")
            continue
        traces.append(trace)
    return traces, issues


def summarize(trace_dir) -> tuple[SummaryTable, list[str]]:
    """Aggregate a directory of traces into per-checkpoint solver statistics."""
    trace_dir = Path(trace_dir)
    if not trace_dir.is_dir():
        raise FileNotFoundError(f"no such trace directory: {trace_dir}")
    traces, issues = load_traces(trace_dir)
    groups: dict[tuple[str, str], list[solver.RunTrace]] = {}
    for t in traces:
        groups.setdefault((t.problem_id, t.solver_id), []).append(t)

    table = SummaryTable()
    for (problem_id, solver_id), members in sorted(groups.items()):
        budget = min(len(t) for t in members)
        best = np.array([t.best_y[:budget] for t in members])
        cum_time_s = np.cumsum(np.array([t.time_ms[:budget] for t in members]), axis=1) / 1e3
        for k in range(budget):
            col = best[:, k]
            table.rows.append(
                SummaryRow(
                    problem=problem_id,
                    solver=solver_id,
                    checkpoint=k + 1,
                    n_runs=len(members),
                    best_min=float(col.min()),
                    best_median=float(statistics.median(col.tolist())),
                    best_mean=float(col.mean()),
                    best_max=float(col.max()),
                    time_total_s_median=float(statistics.median(cum_time_s[:, k].tolist())),
                )
            )
    return table, issues


def _write_curves(trace_dir: Path) -> Path:
    """Aggregated convergence curves: mean best-so-far with the min/max band
    across replications, one row per (solver, iteration)."""
    path = trace_dir / "curves.csv"
    traces, _ = load_traces(trace_dir)
    groups: dict[tuple[str, str], list[solver.RunTrace]] = {}
    for t in traces:
        groups.setdefault((t.problem_id, t.solver_id), []).append(t)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem", "solver", "iter", "n_runs", "best_mean", "best_lo", "best_hi"])
        for (problem_id, solver_id), members in sorted(groups.items()):
            budget = min(len(t) for t in members)
            best = np.array([t.best_y[:budget] for t in members])
            for k in range(budget):
                col = best[:, k]
                writer.writerow(
                    [problem_id, solver_id, k + 1, len(members)]
                    + [repr(float(v)) for v in (col.mean(), col.min(), col.max())]
                )
    return path


@dataclass
class ModelDump:
    """Grid and lattice views of the two surrogate variants fitted on a
    fully measured two-variable problem."""

    problem_id: str
    resolution: float
    grid: list[tuple[float, float, float, float]]
    lattice: list[tuple[int, int, float, float, float]]
    basic: SurrogateModel
    advanced: SurrogateModel

    @property
    def max_residual_basic(self) -> float:
        return max(abs(row[2] - row[3]) for row in self.lattice)

    @property
    def max_residual_advanced(self) -> float:
        return max(abs(row[2] - row[4]) for row in self.lattice)


def dump_model(problem: problems.Problem, resolution: float = 0.1, lam: float = 0.001, seed: int = 0) -> ModelDump:
    """Fit both variants on every lattice point and sample them on a grid.

    Only defined for two-variable problems. Lattice points are measured in
    lexicographic order with the problem's noise substream, then each model
    is fitted with one pass of recursive least squares.
    """
    if problem.d != 2:
        raise ValueError(f"model dump requires a 2-variable problem, got d={problem.d}")
    noise_rng = solver.run_substreams(seed)[2]
    lattice_points = [
        np.array([x0, x1])
        for x0 in range(problem.lower[0], problem.upper[0] + 1)
        for x1 in range(problem.lower[1], problem.upper[1] + 1)
    ]
    measurements = [problem.evaluate(x, noise_rng) for x in lattice_points]

    models = {}
    for variant in ("basic", "advanced"):
        builder = SurrogateModel.basic if variant == "basic" else SurrogateModel.advanced
        model = builder(problem.lower, problem.upper)
        state = rls_init(len(model), model.c, lam)
        for x, y in zip(lattice_points, measurements):
            rls_update(state, model.activations(x), y)
        model.c = state.c
        models[variant] = model

    lattice = [
        (
            int(x[0]),
            int(x[1]),
            float(y),
            models["basic"].evaluate(x.astype(float)),
            models["advanced"].evaluate(x.astype(float)),
        )
        for x, y in zip(lattice_points, measurements)
    ]

    steps0 = int(round((problem.upper[0] - problem.lower[0]) / resolution))
    steps1 = int(round((problem.upper[1] - problem.lower[1]) / resolution))
    grid = []
    for i in range(steps0 + 1):
        for j in range(steps1 + 1):
            pt = np.array([problem.lower[0] + i * resolution, problem.lower[1] + j * resolution])
            grid.append(
                (float(pt[0]), float(pt[1]), models["basic"].evaluate(pt), models["advanced"].evaluate(pt))
            )
    return ModelDump(
        problem_id=problem.id,
        resolution=resolution,
        grid=grid,
        lattice=lattice,
        basic=models["basic"],
        advanced=models["advanced"],
    )


def write_model_dump(dump: ModelDump, out_dir) -> dict[str, str]:
    """Write grid, lattice and per-basis-function CSVs; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    grid_path = out / "grid.csv"
    with grid_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "x1", "g_basic", "g_advanced"])
        for row in dump.grid:
            writer.writerow([repr(v) for v in row])
    paths["grid"] = str(grid_path)

    lattice_path = out / "lattice.csv"
    with lattice_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "x1", "y", "g_basic", "g_advanced"])
        for row in dump.lattice:
            writer.writerow(list(row[:2]) + [repr(v) for v in row[2:]])
    paths["lattice"] = str(lattice_path)

    for variant, model in (("basic", dump.basic), ("advanced", dump.advanced)):
        basis_path = out / f"basis_{variant}.csv"
        with basis_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "i1", "s1", "i2", "s2", "b", "c_k"])
            for row in model.dump_rows():
                writer.writerow(list(row[:6]) + [repr(row[6])])
        paths[f"basis_{variant}"] = str(basis_path)
    return paths


def load_spec_file(path) -> ExperimentSpec:
    """Parse the flat key = value experiment format.

    Lines are ``key = value`` with ``#`` comments; keys are case-insensitive
    and hyphen/underscore-insensitive. ``solvers`` is a comma-separated list
    of solver names; per-solver settings use dotted keys such as ``sa.t0``
    or ``idone.lambda``.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip().lower().replace("_", "-")] = value.strip()
    return spec_from_mapping(raw)


def _pop_typed(raw: dict, key: str, convert, default=None):
    if key not in raw:
        return default
    value = raw.pop(key)
    try:
        return convert(value)
    except ValueError:
        raise ValueError(f"spec key {key!r} has malformed value {value!r}")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def spec_from_mapping(raw: dict[str, str]) -> ExperimentSpec:
    raw = dict(raw)
    problem = raw.pop("problem", None)
    if problem is None:
        raise ValueError("spec is missing the 'problem' key")
    solvers_text = raw.pop("solvers", None)
    if solvers_text is None:
        raise ValueError("spec is missing the 'solvers' key")
    out = raw.pop("out", None)
    if out is None:
        raise ValueError("spec is missing the 'out' key")

    sa_t0 = _pop_typed(raw, "sa.t0", float)
    sa_tf = _pop_typed(raw, "sa.tf", float)
    lam = _pop_typed(raw, "idone.lambda", float, 0.001)
    p_explore = _pop_typed(raw, "idone.p-explore", float)
    max_iters = _pop_typed(raw, "idone.max-iters", int)

    solvers = []
    for name in (s.strip() for s in solvers_text.split(",")):
        if not name:
            continue
        solvers.append(
            SolverSpec(
                name=name,
                t0=sa_t0,
                tf=sa_tf,
                lam=lam,
                p_explore=p_explore,
                max_iters=max_iters,
            )
        )

    spec = ExperimentSpec(
        problem=problem,
        budget=_pop_typed(raw, "budget", int, 100),
        out=out,
        solvers=tuple(solvers),
        replications=_pop_typed(raw, "replications", int, 1),
        seed=_pop_typed(raw, "seed", int, 0),
        d=_pop_typed(raw, "d", int),
        instance=raw.pop("instance", None),
        workers=_pop_typed(raw, "workers", int, os.cpu_count() or 1),
        noise_high=_pop_typed(raw, "noise", float),
        tsp_replications=_pop_typed(raw, "tsp-replications", int, 100),
        record_timing=_pop_typed(raw, "record-timing", _parse_bool, True),
    )
    if raw:
        raise ValueError(f"unknown spec keys: {sorted(raw)}")
    return spec


def override_spec(spec: ExperimentSpec, out=None, seed=None, workers=None, budget=None) -> ExperimentSpec:
    """CLI-flag overrides on top of a loaded spec."""
    updates = {}
    if out is not None:
        updates["out"] = str(out)
    if seed is not None:
        updates["seed"] = seed
    if workers is not None:
        updates["workers"] = workers
    if budget is not None:
        updates["budget"] = budget
    return replace(spec, **updates) if updates else spec
