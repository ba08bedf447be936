"""Black-box integer optimization with a piecewise-linear surrogate model.

Core library (surrogate, fitting, minimization, solvers, problems and the
experiment harness) plus a FastAPI service exposing the harness and a CLI
that talks to the service.
"""

from .fitting import RlsState, batch_solve, rls_init, rls_update
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    SolverSpec,
    SummaryTable,
    dump_model,
    load_spec_file,
    run_experiment,
    summarize,
)
from .model_min import MinimizeOptions, MinimizeResult, minimize_model, round_feasible
from .problems import (
    DistanceMatrix,
    Problem,
    QuadraticInstance,
    decode_route,
    generate_convex_binary,
    load_br17,
    make_br17_problem,
    make_convex_binary_problem,
    make_four_city_problem,
    noisy_tsp_objective,
    parse_tsplib_atsp,
)
from .solver import (
    RunTrace,
    SaConfig,
    SolverConfig,
    explore_step,
    run_idone,
    run_random_search,
    run_simulated_annealing,
)
from .surrogate import BasisFunction, SurrogateModel, build_advanced_basis, build_basic_basis

__version__ = "0.1.0"

__all__ = [
    "BasisFunction",
    "DistanceMatrix",
    "ExperimentResult",
    "ExperimentSpec",
    "MinimizeOptions",
    "MinimizeResult",
    "Problem",
    "QuadraticInstance",
    "RlsState",
    "RunTrace",
    "SaConfig",
    "SolverConfig",
    "SolverSpec",
    "SummaryTable",
    "SurrogateModel",
    "batch_solve",
    "build_advanced_basis",
    "build_basic_basis",
    "decode_route",
    "dump_model",
    "explore_step",
    "generate_convex_binary",
    "load_br17",
    "load_spec_file",
    "make_br17_problem",
    "make_convex_binary_problem",
    "make_four_city_problem",
    "minimize_model",
    "noisy_tsp_objective",
    "parse_tsplib_atsp",
    "rls_init",
    "rls_update",
    "round_feasible",
    "run_experiment",
    "run_idone",
    "run_random_search",
    "run_simulated_annealing",
    "summarize",
]
