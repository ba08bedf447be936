"""Pilot runs backing the acceptance thresholds.

Regenerates docs/pilots/*.csv. The four-city pilot measures how often
IDONE-advanced finds the optimal route length 80 within 50 evaluations; the
noiseless binary pilot measures how often the exact optimum 0 is found at
d=10 within 200 evaluations.
"""

import csv
from pathlib import Path

import numpy as np

from idone.problems import generate_convex_binary, make_convex_binary_problem, make_four_city_problem
from idone.solver import SolverConfig, run_idone

OUT = Path(__file__).resolve().parent.parent / "docs" / "pilots"


def four_city_pilot(seeds: int = 200) -> Path:
    problem = make_four_city_problem()
    path = OUT / "four_city_budget50.csv"
    hits = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "final_best", "found_optimum", "first_hit_iter"])
        for seed in range(seeds):
            trace = run_idone(problem, SolverConfig(budget=50, rng_seed=seed, variant="advanced"))
            found = trace.final_best == 80.0
            hits += found
            first_hit = next((i + 1 for i, y in enumerate(trace.y) if y == 80.0), "")
            writer.writerow([seed, repr(trace.final_best), int(found), first_hit])
    print(f"four-city: {hits}/{seeds} runs found 80 -> {path}")
    return path


def binary_d10_pilot(seeds: int = 100) -> Path:
    path = OUT / "convex_binary_d10_noiseless_budget200.csv"
    hits = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "final_best", "found_optimum"])
        for seed in range(seeds):
            instance = generate_convex_binary(10, np.random.default_rng(1000 + seed))
            problem = make_convex_binary_problem(instance, noise_high=0.0)
            trace = run_idone(problem, SolverConfig(budget=200, rng_seed=seed, variant="advanced"))
            found = trace.final_best == 0.0
            hits += found
            writer.writerow([seed, repr(trace.final_best), int(found)])
    print(f"binary d=10 noiseless: {hits}/{seeds} runs found 0 -> {path}")
    return path


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    four_city_pilot()
    binary_d10_pilot()
