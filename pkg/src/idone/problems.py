"""Benchmark objectives behind a common noisy black-box interface.

Two families: worst-case route length on a noise-perturbed asymmetric TSP
(instances in the TSPLIB explicit full-matrix format, with the 17-city br17
benchmark vendored), and a randomly generated convex quadratic over binary
variables. Every objective call counts as one evaluation of the budget, even
when it internally replays the noise many times.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import io
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_INFINITY_THRESHOLD = 9e6
FORBIDDEN_EDGE_PENALTY = 1e6


class TsplibFormatError(ValueError):
    """Raised for instances outside the supported TSPLIB subset."""


class Problem:
    """A black-box objective over an integer box.

    ``evaluate`` draws any noise it needs from the generator handed to it, so
    the environment randomness is reseedable independently of the solver.
    """

    def __init__(self, problem_id: str, lower, upper, fn, metadata=None):
        lower = np.asarray(lower, dtype=int)
        upper = np.asarray(upper, dtype=int)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("malformed bounds")
        if np.any(lower >= upper):
            raise ValueError("bounds must be strict (lower < upper); fix constant variables upstream")
        self.id = problem_id
        self.lower = lower
        self.upper = upper
        self.d = lower.size
        self.metadata = dict(metadata or {})
        self._fn = fn

    def evaluate(self, x, rng: np.random.Generator) -> float:
        return float(self._fn(np.asarray(x, dtype=int), rng))

    def lattice_size(self) -> float:
        return float(np.prod((self.upper - self.lower + 1).astype(float)))


@dataclass(frozen=True)
class DistanceMatrix:
    """Full n x n distance matrix; entries at or above the parser's infinity
    threshold are flagged forbidden rather than kept as huge distances."""

    n: int
    entries: np.ndarray
    forbidden: np.ndarray

    def checksum(self) -> str:
        return hashlib.sha256(self.entries.tobytes()).hexdigest()


def parse_tsplib_atsp(source, infinity_threshold: float = DEFAULT_INFINITY_THRESHOLD) -> DistanceMatrix:
    """Parse the explicit full-matrix ATSP subset of the TSPLIB ASCII format.

    Accepts a string or a readable text stream. Supported keywords: NAME,
    TYPE, COMMENT, DIMENSION, EDGE_WEIGHT_TYPE, EDGE_WEIGHT_FORMAT,
    EDGE_WEIGHT_SECTION, EOF. Anything outside TYPE: ATSP with
    EDGE_WEIGHT_TYPE: EXPLICIT and EDGE_WEIGHT_FORMAT: FULL_MATRIX is
    rejected.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)

    fields: dict[str, str] = {}
    numbers: list[float] = []
    in_section = False
    for raw in io.StringIO(text):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_section:
            for tok in line.split():
                try:
                    numbers.append(float(tok))
                except ValueError:
                    raise TsplibFormatError(f"malformed numeric entry {tok!r} in EDGE_WEIGHT_SECTION")
            continue
        if line == "EDGE_WEIGHT_SECTION":
            in_section = True
            continue
        if ":" in line:
            key, _, value = line.partition(":")
            fields[key.strip().upper()] = value.strip()
        else:
            raise TsplibFormatError(f"unrecognized line {line!r}")

    if fields.get("TYPE") != "ATSP":
        raise TsplibFormatError(f"unsupported TYPE: {fields.get('TYPE')!r} (only ATSP)")
    if fields.get("EDGE_WEIGHT_TYPE") != "EXPLICIT":
        raise TsplibFormatError(
            f"unsupported EDGE_WEIGHT_TYPE: {fields.get('EDGE_WEIGHT_TYPE')!r} (only EXPLICIT)"
        )
    if fields.get("EDGE_WEIGHT_FORMAT") != "FULL_MATRIX":
        raise TsplibFormatError(
            f"unsupported EDGE_WEIGHT_FORMAT: {fields.get('EDGE_WEIGHT_FORMAT')!r} (only FULL_MATRIX)"
        )
    try:
        n = int(fields["DIMENSION"])
    except (KeyError, ValueError):
        raise TsplibFormatError("missing or malformed DIMENSION")
    if len(numbers) != n * n:
        raise TsplibFormatError(
            f"EDGE_WEIGHT_SECTION has {len(numbers)} entries, DIMENSION {n} requires {n * n}"
        )
    entries = np.array(numbers).reshape(n, n)
    forbidden = entries >= infinity_threshold
    return DistanceMatrix(n=n, entries=entries, forbidden=forbidden)


def load_br17() -> DistanceMatrix:
    """The vendored TSPLIB br17 instance (17 cities, optimum 39)."""
    text = importlib.resources.files("idone.data").joinpath("br17.atsp").read_text()
    return parse_tsplib_atsp(text)


def decode_route(x, n: int) -> list[int]:
    """Turn a position-encoded vector into a closed tour starting at city 1.

    With n cities there are n - 2 variables; x[i] (1-based value) selects the
    next city from the ordered list of ones not yet visited, and the single
    remaining city is appended. Returns 1-based city labels without the
    closing return to city 1.
    """
    x = np.asarray(x, dtype=int)
    if x.size != n - 2:
        raise ValueError(f"route encoding needs {n - 2} variables for {n} cities, got {x.size}")
    remaining = list(range(2, n + 1))
    tour = [1]
    for i, xi in enumerate(x):
        if not 1 <= xi <= len(remaining):
            raise ValueError(f"x[{i}] = {xi} outside [1, {len(remaining)}]")
        tour.append(remaining.pop(int(xi) - 1))
    tour.append(remaining[0])
    return tour


def _edge_indices(tour: list[int]) -> tuple[np.ndarray, np.ndarray]:
    cities = np.asarray(tour, dtype=int) - 1
    return cities, np.roll(cities, -1)


def tour_length(matrix: DistanceMatrix, tour: list[int], forbidden_penalty: float = FORBIDDEN_EDGE_PENALTY) -> float:
    """Noiseless closed-tour length; forbidden edges cost the fixed penalty."""
    rows, cols = _edge_indices(tour)
    w = matrix.entries[rows, cols]
    return float(np.where(matrix.forbidden[rows, cols], forbidden_penalty, w).sum())


def noisy_tsp_objective(
    matrix: DistanceMatrix,
    x,
    rng: np.random.Generator,
    replications: int = 100,
    noise_high: float = 1.0,
    forbidden_penalty: float = FORBIDDEN_EDGE_PENALTY,
) -> float:
    """Worst observed tour length over independently perturbed replications.

    Each replication adds a fresh Uniform[0, noise_high] draw to every edge
    of the decoded route; zero-distance and forbidden edges stay noise-free.
    The maximum over replications is the robust objective. One call counts
    as one budget evaluation regardless of the replication count.
    """
    tour = decode_route(x, matrix.n)
    rows, cols = _edge_indices(tour)
    w = matrix.entries[rows, cols]
    forb = matrix.forbidden[rows, cols]
    base = float(np.where(forb, forbidden_penalty, w).sum())
    if noise_high <= 0:
        return base
    noisy = ~forb & (w != 0)
    draws = rng.random((replications, rows.size)) * noise_high
    draws[:, ~noisy] = 0.0
    return base + float(draws.sum(axis=1).max())


def make_atsp_problem(
    matrix: DistanceMatrix,
    problem_id: str,
    replications: int = 100,
    noise_high: float = 1.0,
) -> Problem:
    """Position-encoded robust-route problem over an arbitrary parsed instance."""
    n = matrix.n
    if n < 3:
        raise ValueError("need at least 3 cities")
    d = n - 2
    lower = np.ones(d, dtype=int)
    upper = np.array([n - i for i in range(1, d + 1)], dtype=int)

    def fn(x, rng):
        return noisy_tsp_objective(matrix, x, rng, replications=replications, noise_high=noise_high)

    return Problem(
        problem_id,
        lower,
        upper,
        fn,
        metadata={
            "kind": "atsp",
            "cities": n,
            "lattice_size": float(math.factorial(n - 1)),
            "noise_high": noise_high,
            "replications": replications,
            "matrix_checksum": matrix.checksum(),
        },
    )


def make_br17_problem(
    matrix: DistanceMatrix | None = None,
    replications: int = 100,
    noise_high: float = 1.0,
) -> Problem:
    """The 17-city robust-route benchmark: 15 variables, worst-of-100 noise."""
    matrix = matrix if matrix is not None else load_br17()
    if matrix.n != 17:
        raise ValueError(f"br17 requires 17 cities, got {matrix.n}")
    return make_atsp_problem(matrix, "br17", replications=replications, noise_high=noise_high)


FOUR_CITY_DISTANCES = np.array(
    [
        [0.0, 10.0, 15.0, 20.0],
        [10.0, 0.0, 35.0, 25.0],
        [15.0, 35.0, 0.0, 30.0],
        [20.0, 25.0, 30.0, 0.0],
    ]
)


def four_city_matrix() -> DistanceMatrix:
    """The 4-city toy instance; two optimal tours of length 80, the rest 95."""
    return DistanceMatrix(n=4, entries=FOUR_CITY_DISTANCES.copy(), forbidden=np.zeros((4, 4), dtype=bool))


def make_four_city_problem(replications: int = 100, noise_high: float = 0.0) -> Problem:
    """Two-variable TSP used for model visualization; noiseless by default."""
    return make_atsp_problem(
        four_city_matrix(), "four-city", replications=replications, noise_high=noise_high
    )


@dataclass(frozen=True)
class QuadraticInstance:
    """Symmetric positive-definite quadratic with a known binary minimizer."""

    A: np.ndarray
    x_opt: np.ndarray

    @property
    def d(self) -> int:
        return self.x_opt.size


def generate_convex_binary(d: int, rng: np.random.Generator) -> QuadraticInstance:
    """Draw A = (U + U^T)/d + I from uniform U and a random binary optimum.

    Positive definiteness is verified with a Cholesky factorization; on the
    (unexpected) failure the instance is regenerated from the next values of
    the stream.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    while True:
        U = rng.random((d, d))
        A = (U + U.T) / d + np.eye(d)
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            continue
        x_opt = rng.integers(0, 2, size=d)
        return QuadraticInstance(A=A, x_opt=x_opt)


def convex_binary_objective(
    instance: QuadraticInstance, x, rng: np.random.Generator, noise_high: float = 1.0
) -> float:
    """(x - x*)^T A (x - x*) plus one uniform noise draw per call."""
    r = np.asarray(x, dtype=float) - instance.x_opt
    value = float(r @ instance.A @ r)
    if noise_high > 0:
        value += float(rng.random()) * noise_high
    return value


def make_convex_binary_problem(instance: QuadraticInstance, noise_high: float = 1.0) -> Problem:
    d = instance.d

    def fn(x, rng):
        return convex_binary_objective(instance, x, rng, noise_high=noise_high)

    return Problem(
        f"convex-binary-d{d}",
        np.zeros(d, dtype=int),
        np.ones(d, dtype=int),
        fn,
        metadata={"kind": "convex-binary", "lattice_size": 2.0**d, "noise_high": noise_high},
    )


def quadratic_to_csv(instance: QuadraticInstance, seed=None) -> str:
    """Reproducibility record (d, seed, x*, A) as CSV text."""
    lines = [f"d,{instance.d}", f"seed,{'' if seed is None else seed}"]
    lines.append("x_opt," + ",".join(str(int(v)) for v in instance.x_opt))
    for row in instance.A:
        lines.append("A," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def quadratic_from_csv(text: str) -> tuple[QuadraticInstance, int | None]:
    d = None
    seed = None
    x_opt = None
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, rest = line.partition(",")
        if key == "d":
            d = int(rest)
        elif key == "seed":
            seed = int(rest) if rest.strip() else None
        elif key == "x_opt":
            x_opt = np.array([int(v) for v in rest.split(",")])
        elif key == "A":
            rows.append([float(v) for v in rest.split(",")])
        else:
            raise ValueError(f"unknown field {key!r}")
    A = np.array(rows)
    if d is None or x_opt is None or A.shape != (d, d) or x_opt.size != d:
        raise ValueError("incomplete quadratic instance record")
    return QuadraticInstance(A=A, x_opt=x_opt), seed
