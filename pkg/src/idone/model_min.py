"""Integer minimization of the surrogate inside its box.

The surrogate is minimized as a continuous function by bound-constrained
quasi-Newton descent (L-BFGS-B with the analytical gradient, iterates
projected into the box), then the relaxed minimizer is rounded to the
nearest lattice point. By construction of the basis, rounding a converged
local minimum never increases the model value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .surrogate import SurrogateModel


@dataclass(frozen=True)
class MinimizeOptions:
    """Descent controls; the defaults suit surrogates over small integer boxes.

    max_iters defaults to 20 * d when left as None. ftol is the relative
    function-decrease threshold that usually halts the inner descent on a
    piecewise-linear landscape; convergence is then judged separately by the
    projected-gradient norm against gtol. A line-search failure on a kink is
    retried up to ``restarts`` times with a fresh curvature estimate.
    """

    gtol: float = 1e-8
    max_iters: int | None = None
    ftol: float = 1e-10
    restarts: int = 2


@dataclass(frozen=True)
class MinimizeResult:
    x_star: np.ndarray
    x_relaxed: np.ndarray
    g_relaxed: float
    g_rounded: float
    iterations: int
    converged: bool


def round_feasible(x, lower, upper) -> np.ndarray:
    """Round half away from zero per coordinate, then clamp into [lower, upper].

    The tie rule is fixed (not banker's rounding) so results are identical
    across platforms.
    """
    x = np.asarray(x, dtype=float)
    rounded = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(rounded, lower, upper).astype(int)


def projected_gradient_norm(model: SurrogateModel, x) -> float:
    """Max-norm of x - proj(x - grad g(x)); zero exactly at box-stationary points."""
    x = np.asarray(x, dtype=float)
    step = np.clip(x - model.gradient(x), model.lower, model.upper)
    return float(np.max(np.abs(x - step)))


def minimize_model(model: SurrogateModel, start, opts: MinimizeOptions | None = None) -> MinimizeResult:
    """Descend the surrogate from ``start`` and round the result to the lattice.

    ``start`` must lie inside the box. Raises if the model produces non-finite
    values, which signals corrupted weights. ``converged`` reports whether the
    final point is stationary (projected-gradient norm within gtol); callers
    are expected to proceed either way, since the exploration step perturbs
    the result anyway.
    """
    opts = opts or MinimizeOptions()
    start = np.asarray(start, dtype=float)
    if start.shape != (model.d,):
        raise ValueError(f"start has shape {start.shape}, expected ({model.d},)")
    if np.any(start < model.lower) or np.any(start > model.upper):
        raise ValueError(f"start {start} outside box [{model.lower}, {model.upper}]")
    if not np.isfinite(model.evaluate(start)):
        raise ValueError("surrogate returned a non-finite value; weights are corrupted")

    max_iters = opts.max_iters if opts.max_iters is not None else 20 * model.d
    bounds = list(zip(model.lower.astype(float), model.upper.astype(float)))
    options = {"gtol": opts.gtol, "ftol": opts.ftol, "maxiter": max_iters}

    def fun(x):
        return model.evaluate(x), model.gradient(x)

    res = _scipy_minimize(fun, start, jac=True, method="L-BFGS-B", bounds=bounds, options=options)
    iterations = int(res.nit)
    # A failed line search usually means stale curvature pairs straddling a
    # kink; restarting from the stall point with a fresh estimate recovers.
    attempts = 0
    while res.status == 2 and attempts < opts.restarts and iterations < max_iters:
        res = _scipy_minimize(fun, res.x, jac=True, method="L-BFGS-B", bounds=bounds, options=options)
        iterations += int(res.nit)
        attempts += 1

    x_relaxed = np.clip(res.x, model.lower, model.upper)
    g_relaxed = model.evaluate(x_relaxed)
    if not np.isfinite(g_relaxed):
        raise ValueError("surrogate returned a non-finite value; weights are corrupted")
    x_star = round_feasible(x_relaxed, model.lower, model.upper)
    return MinimizeResult(
        x_star=x_star,
        x_relaxed=x_relaxed,
        g_relaxed=g_relaxed,
        g_rounded=model.evaluate(x_star.astype(float)),
        iterations=iterations,
        converged=projected_gradient_norm(model, x_relaxed) <= opts.gtol,
    )
