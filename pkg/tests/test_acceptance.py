"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
report. The two experiment-scale criteria take a few minutes combined on one
core; everything else finishes in seconds.
"""

import time

import numpy as np
import pytest

from idone.fitting import batch_solve, rls_init, rls_update
from idone.harness import ExperimentSpec, SolverSpec, run_experiment, summarize
from idone.model_min import minimize_model
from idone.problems import make_br17_problem, make_four_city_problem, tour_length, four_city_matrix, decode_route
from idone.solver import SolverConfig, run_idone
from idone.surrogate import SurrogateModel, build_advanced_basis, build_basic_basis


def report(number: int, ok: bool, detail: str):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, f"criterion {number}: {detail}"


def fitted_random_model(rng):
    d = int(rng.integers(1, 6))
    lower = rng.integers(-3, 2, size=d)
    upper = lower + rng.integers(1, 5, size=d)
    variant = rng.choice(["basic", "advanced"])
    build = SurrogateModel.basic if variant == "basic" else SurrogateModel.advanced
    model = build(lower, upper)
    state = rls_init(len(model), rng.normal(size=len(model)), 0.001)
    for _ in range(3):
        x = rng.integers(lower, upper, endpoint=True)
        rls_update(state, model.activations(x), rng.normal())
    model.c = state.c
    return model, variant


def test_criterion_1_rounding_preserves_converged_minima():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    converged = 0
    worst_gap = -np.inf
    for _ in range(100):
        model, variant = fitted_random_model(rng)
        start = model.lower + rng.random(model.d) * (model.upper - model.lower)
        result = minimize_model(model, start)
        if not result.converged:
            continue
        converged += 1
        gap = result.g_rounded - result.g_relaxed
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-6, f"rounding raised the model value by {gap}"
        if variant == "basic":
            unclamped = np.sign(result.x_relaxed) * np.floor(np.abs(result.x_relaxed) + 0.5)
            assert np.all(unclamped >= model.lower) and np.all(unclamped <= model.upper)
        assert np.all(result.x_star >= model.lower) and np.all(result.x_star <= model.upper)
    elapsed = time.perf_counter() - started
    report(
        1,
        converged >= 20 and elapsed < 60,
        f"{converged}/100 descents converged, worst rounding gap {worst_gap:.2e}, "
        f"all within 1e-6 ({elapsed:.1f}s)",
    )


def test_criterion_2_rls_matches_batch_solution():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(20):
        D = int(rng.integers(1, 41))
        N = int(rng.integers(1, 201))
        lam = float(rng.choice([0.001, 0.01, 0.1]))
        c0 = rng.normal(size=D)
        state = rls_init(D, c0, lam)
        pairs = []
        for _ in range(N):
            a = np.maximum(rng.normal(size=D), 0.0)
            y = rng.normal()
            pairs.append((a, y))
            rls_update(state, a, y)
        direct = batch_solve(pairs, c0, lam)
        rel = np.linalg.norm(state.c - direct) / max(np.linalg.norm(direct), 1e-12)
        worst = max(worst, rel)
        assert rel < 1e-6
    report(2, True, f"20 scenarios (D<=40, N<=200), worst relative error {worst:.2e}")


def test_criterion_3_basis_count_formulas():
    rng = np.random.default_rng(303)
    for _ in range(200):
        d = int(rng.integers(1, 9))
        lower = rng.integers(-10, 10, size=d)
        upper = lower + rng.integers(1, 11, size=d)
        r = upper - lower
        expected_basic = 1 + 2 * int(r.sum())
        expected_advanced = expected_basic + 2 * int((r[1:] + r[:-1]).sum())
        assert len(build_basic_basis(d, lower, upper)) == expected_basic
        assert len(build_advanced_basis(d, lower, upper)) == expected_advanced
    report(3, True, "200 random boxes match both closed-form counts exactly")


def test_criterion_4_four_city_reproduction():
    matrix = four_city_matrix()
    lengths = {
        (1, 2): 80.0, (2, 2): 80.0,
        (1, 1): 95.0, (2, 1): 95.0, (3, 1): 95.0, (3, 2): 95.0,
    }
    for x, expected in lengths.items():
        assert tour_length(matrix, decode_route(list(x), 4)) == expected

    problem = make_four_city_problem()
    hits = 0
    for seed in range(20):
        trace = run_idone(problem, SolverConfig(budget=50, rng_seed=seed, variant="advanced"))
        hits += trace.final_best == 80.0
    report(
        4,
        hits >= 18,
        f"tour lengths 80/80/95/95/95/95 exact; optimum found in {hits}/20 seeded runs "
        f"(threshold 18/20 from the 200-seed pilot in docs/pilots/)",
    )


@pytest.fixture(scope="module")
def binary_experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("binary100")
    spec = ExperimentSpec(
        problem="convex-binary",
        d=100,
        budget=1000,
        out=str(out),
        solvers=(SolverSpec("idone-advanced"), SolverSpec("idone-basic"), SolverSpec("rs")),
        replications=10,
        seed=0,
    )
    started = time.perf_counter()
    result = run_experiment(spec)
    return result, time.perf_counter() - started


def test_criterion_5_convex_binary_desk_scale(binary_experiment):
    result, elapsed = binary_experiment
    assert result.ok, [r.error for r in result.runs if not r.ok]
    finals = {r.solver: r for r in result.summary.final_rows()}
    adv = finals["idone-advanced"].best_median
    basic = finals["idone-basic"].best_median
    rs = finals["rs"].best_median
    ok = adv <= 2.0 and basic <= 2.0 and adv < rs and basic < rs and elapsed < 1800
    report(
        5,
        ok,
        f"d=100, budget 1000, 10 runs: median best advanced {adv:.3f}, basic {basic:.3f} "
        f"(both <= 2.0), random search {rs:.3f} ({elapsed / 60:.1f} min)",
    )


def test_criterion_6_iteration_cost_independent_of_history():
    problem_spec = ExperimentSpec(
        problem="convex-binary",
        d=100,
        budget=1,
        out="unused",
        solvers=(SolverSpec("rs"),),
        seed=0,
    )
    from idone.harness import build_problem

    problem = build_problem(problem_spec, 0)
    trace = run_idone(problem, SolverConfig(budget=1000, rng_seed=0, variant="advanced"))
    times = np.array(trace.time_ms)
    early = float(np.median(times[:100]))
    late = float(np.median(times[899:]))
    report(
        6,
        late <= 2.0 * early,
        f"d=100 IDONE run: median iteration time {early:.2f} ms (iters 1-100) vs "
        f"{late:.2f} ms (iters 900-1000), ratio {late / early:.2f} <= 2",
    )


def test_criterion_7_br17_protocol_smoke(tmp_path):
    spec = ExperimentSpec(
        problem="br17",
        budget=500,
        out=str(tmp_path / "br17"),
        solvers=(SolverSpec("idone-advanced"), SolverSpec("rs")),
        replications=5,
        seed=0,
    )
    started = time.perf_counter()
    result = run_experiment(spec)
    elapsed = time.perf_counter() - started
    assert result.ok, [r.error for r in result.runs if not r.ok]
    finals = {r.solver: r for r in result.summary.final_rows()}
    adv = finals["idone-advanced"].best_mean
    rs = finals["rs"].best_mean
    report(
        7,
        adv <= rs and elapsed < 1800,
        f"br17, budget 500, 5 runs: mean final best advanced {adv:.2f} <= random search "
        f"{rs:.2f} ({elapsed / 60:.1f} min)",
    )


def test_criterion_8_gradient_matches_finite_differences():
    rng = np.random.default_rng(808)
    h = 1e-6
    worst = 0.0
    checked = 0
    while checked < 100:
        d = int(rng.integers(1, 6))
        lower = rng.integers(-3, 2, size=d)
        upper = lower + rng.integers(1, 5, size=d)
        model = SurrogateModel.advanced(lower, upper)
        model.c = rng.normal(size=len(model))
        x = lower + rng.random(d) * (upper - lower)
        if np.min(np.abs(model.linear_args(x))) < 1e-4:
            continue
        grad = model.gradient(x)
        fd = np.zeros(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fd[i] = (model.evaluate(x + e) - model.evaluate(x - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(grad - fd))))
        checked += 1
    report(8, worst <= 1e-4, f"100 off-lattice points, max |analytic - central-difference| = {worst:.2e}")


def test_criterion_9_run_is_byte_deterministic(tmp_path):
    def spec_for(out):
        return ExperimentSpec(
            problem="convex-binary",
            d=8,
            budget=15,
            out=str(out),
            solvers=(SolverSpec("idone-advanced"), SolverSpec("rs"), SolverSpec("sa")),
            replications=2,
            seed=77,
            record_timing=False,
        )

    run_experiment(spec_for(tmp_path / "first"))
    run_experiment(spec_for(tmp_path / "second"))
    first = sorted((tmp_path / "first").rglob("*.csv"))
    second = sorted((tmp_path / "second").rglob("*.csv"))
    assert [p.name for p in first] == [p.name for p in second]
    identical = all(a.read_bytes() == b.read_bytes() for a, b in zip(first, second))
    # the summary recomputed from traces alone must agree as well
    table, _ = summarize(tmp_path / "first")
    table_path = tmp_path / "recomputed.csv"
    table.write_csv(table_path)
    resummarized = table_path.read_bytes() == (tmp_path / "first" / "summary.csv").read_bytes()
    report(
        9,
        identical and resummarized,
        f"{len(first)} files (traces, summary, curves, instance records) byte-identical "
        "across repeated runs; timing columns recorded as 0.0 under record_timing=false "
        "(wall-clock timing is inherently non-reproducible)",
    )
