import math

import numpy as np
import pytest

from idone.problems import (
    Problem,
    generate_convex_binary,
    make_convex_binary_problem,
    make_four_city_problem,
)
from idone.solver import (
    RunTrace,
    SaConfig,
    SolverConfig,
    acceptance_probability,
    explore_step,
    run_idone,
    run_random_search,
    run_simulated_annealing,
)


class CountingProblem(Problem):
    def __init__(self, inner):
        super().__init__(inner.id, inner.lower, inner.upper, inner._fn, inner.metadata)
        self.calls = 0

    def evaluate(self, x, rng):
        self.calls += 1
        return super().evaluate(x, rng)


def test_explore_step_zero_probability_is_identity():
    rng = np.random.default_rng(0)
    x = np.array([2, 0, 5])
    out = explore_step(x, [0, 0, 0], [5, 5, 5], 0.0, rng)
    assert np.array_equal(out, x)


def test_explore_step_at_lower_bound_forced_up():
    rng = np.random.default_rng(1)
    lower = np.zeros(6, dtype=int)
    upper = np.full(6, 4)
    out = explore_step(lower, lower, upper, 1.0, rng)
    assert np.array_equal(out, lower + 1)


def test_explore_step_at_upper_bound_forced_down():
    rng = np.random.default_rng(2)
    lower = np.zeros(6, dtype=int)
    upper = np.full(6, 4)
    out = explore_step(upper, lower, upper, 1.0, rng)
    assert np.array_equal(out, upper - 1)


def test_explore_step_interior_frequencies():
    rng = np.random.default_rng(3)
    draws = 100_000
    deltas = np.empty(draws)
    for i in range(draws):
        deltas[i] = explore_step([5], [0], [10], 0.5, rng)[0] - 5
    stay = np.mean(deltas == 0)
    up = np.mean(deltas == 1)
    down = np.mean(deltas == -1)
    assert abs(stay - 0.5) < 0.01
    assert abs(up - 0.25) < 0.01
    assert abs(down - 0.25) < 0.01


def test_explore_step_never_leaves_bounds():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        d = int(rng.integers(1, 6))
        lower = rng.integers(-5, 2, size=d)
        upper = lower + rng.integers(1, 6, size=d)
        corner = rng.random()
        if corner < 0.3:
            x = lower.copy()
        elif corner < 0.6:
            x = upper.copy()
        else:
            x = rng.integers(lower, upper, endpoint=True)
        p = float(rng.random())
        for _ in range(50):
            out = explore_step(x, lower, upper, p, rng)
            assert np.all(out >= lower) and np.all(out <= upper)


def test_explore_step_rejects_out_of_bounds_point():
    with pytest.raises(ValueError):
        explore_step([6], [0], [5], 0.5, np.random.default_rng(0))


def test_acceptance_probability_formula():
    assert acceptance_probability(10.0, 12.0, 2.0) == pytest.approx(math.exp(-1.0))
    assert acceptance_probability(10.0, 9.0, 2.0) == 1.0
    assert acceptance_probability(10.0, 10.0, 2.0) == 1.0


def test_budget_one_gives_single_row_trace():
    problem = make_four_city_problem()
    for trace in (
        run_idone(problem, SolverConfig(budget=1, rng_seed=0)),
        run_random_search(problem, 1, 0),
        run_simulated_annealing(problem, SaConfig(budget=1, rng_seed=0, t0=1.0, tf=0.5)),
    ):
        assert len(trace) == 1
        assert trace.final_best == trace.y[0]


def test_all_solvers_spend_exactly_the_budget():
    budget = 17
    for runner in (
        lambda p: run_idone(p, SolverConfig(budget=budget, rng_seed=1, variant="basic")),
        lambda p: run_random_search(p, budget, 1),
        lambda p: run_simulated_annealing(p, SaConfig(budget=budget, rng_seed=1, t0=1.0, tf=0.95)),
    ):
        problem = CountingProblem(make_four_city_problem())
        trace = runner(problem)
        assert problem.calls == budget
        assert len(trace) == budget


def test_traces_are_bit_identical_across_reruns():
    problem = make_four_city_problem(noise_high=1.0)
    for runner in (
        lambda: run_idone(problem, SolverConfig(budget=12, rng_seed=9, variant="advanced")),
        lambda: run_random_search(problem, 12, 9),
        lambda: run_simulated_annealing(problem, SaConfig(budget=12, rng_seed=9, t0=4.48, tf=0.996)),
    ):
        a, b = runner(), runner()
        assert np.array_equal(np.array(a.x), np.array(b.x))
        assert a.y == b.y
        assert a.best_y == b.best_y
        assert a.surrogate_min == b.surrogate_min or (
            all(map(math.isnan, a.surrogate_min)) and all(map(math.isnan, b.surrogate_min))
        )


def test_solvers_share_initial_point_given_same_seed():
    problem = make_convex_binary_problem(generate_convex_binary(8, np.random.default_rng(5)))
    seed = 123
    t_idone = run_idone(problem, SolverConfig(budget=2, rng_seed=seed))
    t_rs = run_random_search(problem, 2, seed)
    t_sa = run_simulated_annealing(problem, SaConfig(budget=2, rng_seed=seed, t0=1.0, tf=0.95))
    assert np.array_equal(t_idone.x[0], t_rs.x[0])
    assert np.array_equal(t_idone.x[0], t_sa.x[0])
    # same noise substream too: first measurement identical
    assert t_idone.y[0] == t_rs.y[0] == t_sa.y[0]


def test_best_so_far_is_non_increasing():
    problem = make_convex_binary_problem(generate_convex_binary(10, np.random.default_rng(2)))
    trace = run_idone(problem, SolverConfig(budget=60, rng_seed=7, variant="basic"))
    assert np.all(np.diff(trace.best_y) <= 0)


def test_idone_finds_four_city_optimum_quickly():
    problem = make_four_city_problem()
    trace = run_idone(problem, SolverConfig(budget=50, rng_seed=11, variant="advanced"))
    assert trace.final_best == pytest.approx(80.0)


def test_random_search_solves_tiny_binary():
    # 32 lattice points, 1000 draws: finding the optimum is essentially certain
    inst = generate_convex_binary(5, np.random.default_rng(1))
    problem = make_convex_binary_problem(inst, noise_high=0.0)
    trace = run_random_search(problem, 1000, 3)
    assert trace.final_best == pytest.approx(0.0)


def test_idone_solves_noiseless_binary_most_seeds():
    hits = 0
    for seed in range(20):
        inst = generate_convex_binary(10, np.random.default_rng(1000 + seed))
        problem = make_convex_binary_problem(inst, noise_high=0.0)
        trace = run_idone(problem, SolverConfig(budget=200, rng_seed=seed, variant="advanced"))
        hits += trace.final_best == pytest.approx(0.0)
    assert hits >= 19  # pilot (docs/pilots): 20/20 across several base seeds


def test_initial_point_override_and_validation():
    problem = make_four_city_problem()
    trace = run_idone(problem, SolverConfig(budget=1, rng_seed=0, initial_point=(2, 2)))
    assert np.array_equal(trace.x[0], [2, 2])
    with pytest.raises(ValueError):
        run_idone(problem, SolverConfig(budget=1, rng_seed=0, initial_point=(9, 9)))


def test_non_finite_measurement_aborts():
    problem = make_four_city_problem()
    bad = Problem(problem.id, problem.lower, problem.upper, lambda x, rng: float("inf"))
    with pytest.raises(RuntimeError):
        run_idone(bad, SolverConfig(budget=3, rng_seed=0))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(budget=0, rng_seed=0)
    with pytest.raises(ValueError):
        SolverConfig(budget=1, rng_seed=0, variant="fancy")
    with pytest.raises(ValueError):
        SolverConfig(budget=1, rng_seed=0, p_explore=1.5)
    with pytest.raises(ValueError):
        SaConfig(budget=1, rng_seed=0, t0=0.0, tf=0.5)
    with pytest.raises(ValueError):
        SaConfig(budget=1, rng_seed=0, t0=1.0, tf=1.0)


def test_trace_csv_roundtrip(tmp_path):
    problem = make_four_city_problem(noise_high=1.0)
    trace = run_idone(problem, SolverConfig(budget=7, rng_seed=21, variant="basic"))
    path = trace.write_csv(tmp_path / trace.filename())
    assert path.name == "four-city_idone-basic_21.csv"
    header = path.read_text().splitlines()[0]
    assert header == "iter,y,best_y,surrogate_min,time_ms,x0,x1"
    back = RunTrace.read_csv(path)
    assert back.problem_id == "four-city"
    assert back.solver_id == "idone-basic"
    assert back.seed == 21
    assert back.y == trace.y
    assert back.best_y == trace.best_y
    assert np.array_equal(np.array(back.x), np.array(trace.x))
    assert back.time_ms == trace.time_ms


def test_trace_csv_rejects_garbage(tmp_path):
    bad = tmp_path / "p_s_1.csv"
    bad.write_text("not,a,trace\n1,2,3\n")
    with pytest.raises(ValueError):
        RunTrace.read_csv(bad)
    odd = tmp_path / "nounderscores.csv"
    odd.write_text("iter,y,best_y,surrogate_min,time_ms,x0\n")
    with pytest.raises(ValueError):
        RunTrace.read_csv(odd)
