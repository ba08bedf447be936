"""Online fitting of the surrogate weights by recursive least squares.

One update per measurement, O(D^2) time and memory regardless of how many
measurements have been seen. The recursion with P0 = I/lambda reproduces, at
every step, the exact minimizer of

    sum_n (y_n - a_n . c)^2 + lambda * ||c - c0||^2

over the measurements seen so far; ``batch_solve`` computes that minimizer
directly and exists as an independent cross-check, not for production use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .surrogate import initial_weights


@dataclass
class RlsState:
    """Weights plus the D x D covariance-like matrix of the RLS recursion.

    ``update`` mutates the state and must be externally serialized; reading
    ``c`` concurrently is safe when no writer is active.
    """

    c: np.ndarray
    P: np.ndarray
    lam: float
    n: int = 0

    def update(self, a, y: float) -> "RlsState":
        return rls_update(self, a, y)


def rls_init(n_basis: int, c0=None, lam: float = 0.001) -> RlsState:
    """Fresh state: c = c0 and P = I/lambda, so no data has any weight yet.

    c0 defaults to the convex starting weights (0 on the bias, 1 elsewhere).
    """
    if lam <= 0:
        raise ValueError(f"regularization parameter must be positive, got {lam}")
    if n_basis == 0:
        raise ValueError("model without basis functions cannot be fitted")
    c0 = initial_weights(n_basis) if c0 is None else np.asarray(c0, dtype=float)
    if c0.ndim != 1 or c0.size != n_basis:
        raise ValueError(f"c0 must be a vector of length {n_basis}")
    P = np.eye(n_basis) / lam
    return RlsState(c=c0.copy(), P=P, lam=float(lam))


def rls_update(state: RlsState, a, y: float) -> RlsState:
    """Fold one measurement (activation row a, observed value y) into state.

    Standard recursion: gain k = Pa / (1 + a.Pa), then c += k * innovation
    and P -= k (Pa)^T. P is re-symmetrized each call so thousands of updates
    cannot drift it away from symmetry.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != state.c.shape:
        raise ValueError(f"activation vector has shape {a.shape}, expected {state.c.shape}")
    if not np.isfinite(y):
        raise ValueError(f"non-finite measurement: {y}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite activation vector")
    Pa = state.P @ a
    gain = Pa / (1.0 + a @ Pa)
    state.c += gain * (y - a @ state.c)
    state.P -= np.outer(gain, Pa)
    state.P += state.P.T
    state.P *= 0.5
    state.n += 1
    return state


def batch_solve(pairs, c0, lam: float) -> np.ndarray:
    """Direct normal-equations solution of the regularized problem.

    Solves (A^T A + lambda I)(c - c0) = A^T (y - A c0). Test oracle for the
    recursion; never called from the optimization loop.
    """
    if lam <= 0:
        raise ValueError(f"regularization parameter must be positive, got {lam}")
    if not pairs:
        raise ValueError("at least one (activation, value) pair is required")
    c0 = np.asarray(c0, dtype=float)
    A = np.array([np.asarray(a, dtype=float) for a, _ in pairs])
    y = np.array([float(v) for _, v in pairs])
    if A.ndim != 2 or A.shape[1] != c0.size:
        raise ValueError("activation rows do not match c0 length")
    lhs = A.T @ A + lam * np.eye(c0.size)
    rhs = A.T @ (y - A @ c0)
    return c0 + np.linalg.solve(lhs, rhs)
