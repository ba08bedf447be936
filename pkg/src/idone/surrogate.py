"""Piecewise-linear ReLU surrogate models whose local minima sit on integer points.

The model is g(x) = sum_k c_k * max(0, w_k. x + b_k) with fixed integer
directions w_k and offsets b_k; only the weights c are ever fitted. Two
constructions are provided: a basic one whose kinks are the axis-aligned
hyperplanes x_i = j, and an advanced one that adds diagonal hyperplanes
x_i - x_{i-1} = j coupling adjacent variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BasisFunction:
    """One ReLU term max(0, w.x + b) with w stored sparsely.

    w has at most two nonzero entries, each +-1, kept as (dimension, sign)
    slots; a slot with dimension -1 is unused. The bias term is the all-zero
    w with b = 1.
    """

    b: int
    i1: int = -1
    s1: int = 0
    i2: int = -1
    s2: int = 0

    def z(self, x) -> float:
        """Linear argument w.x + b at a point."""
        v = float(self.b)
        if self.i1 >= 0:
            v += self.s1 * float(x[self.i1])
        if self.i2 >= 0:
            v += self.s2 * float(x[self.i2])
        return v

    def weight_vector(self, d: int) -> np.ndarray:
        """Dense copy of w, for callers that need the full direction."""
        w = np.zeros(d)
        if self.i1 >= 0:
            w[self.i1] = self.s1
        if self.i2 >= 0:
            w[self.i2] = self.s2
        return w


def _check_bounds(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    if lower.ndim != 1 or lower.shape != upper.shape:
        raise ValueError("lower and upper bounds must be 1-d and of equal length")
    if lower.size == 0:
        raise ValueError("empty bounds")
    if not (np.all(lower == np.floor(lower)) and np.all(upper == np.floor(upper))):
        raise ValueError("bounds must be integer")
    lower = lower.astype(int)
    upper = upper.astype(int)
    if np.any(lower >= upper):
        bad = int(np.argmax(lower >= upper))
        raise ValueError(
            f"bounds must satisfy lower < upper in every dimension "
            f"(dimension {bad}: [{lower[bad]}, {upper[bad]}]); eliminate "
            f"constant variables before building a model"
        )
    return lower, upper


def build_basic_basis(d: int, lower, upper) -> list[BasisFunction]:
    """ReLU terms whose kinks are the axis-aligned planes x_i = j.

    Emission order is fixed: the bias term first, then per dimension i, per
    integer level j from lower[i] to upper[i], the term with direction +e_i
    at the lower bound, -e_i at the upper bound, and both in between. The
    result has exactly 1 + 2 * sum(upper - lower) terms.
    """
    lower, upper = _check_bounds(lower, upper)
    if d != lower.size:
        raise ValueError(f"d={d} does not match bounds of length {lower.size}")
    basis = [BasisFunction(b=1)]
    for i in range(d):
        for j in range(lower[i], upper[i] + 1):
            if j == lower[i]:
                basis.append(BasisFunction(b=-j, i1=i, s1=1))
            elif j == upper[i]:
                basis.append(BasisFunction(b=j, i1=i, s1=-1))
            else:
                basis.append(BasisFunction(b=-j, i1=i, s1=1))
                basis.append(BasisFunction(b=j, i1=i, s1=-1))
    return basis


def build_advanced_basis(d: int, lower, upper) -> list[BasisFunction]:
    """Basic terms plus diagonal terms with kinks on x_i - x_{i-1} = j.

    For each adjacent pair (i-1, i) the level j runs from
    lower[i] - upper[i-1] to upper[i] - lower[i-1], with the same
    lower/interior/upper branching as the basic construction. For d = 1
    there are no pairs and the result equals the basic basis.
    """
    basis = build_basic_basis(d, lower, upper)
    lower, upper = _check_bounds(lower, upper)
    for i in range(1, d):
        j_lo = lower[i] - upper[i - 1]
        j_hi = upper[i] - lower[i - 1]
        for j in range(j_lo, j_hi + 1):
            if j == j_lo:
                basis.append(BasisFunction(b=-j, i1=i, s1=1, i2=i - 1, s2=-1))
            elif j == j_hi:
                basis.append(BasisFunction(b=j, i1=i, s1=-1, i2=i - 1, s2=1))
            else:
                basis.append(BasisFunction(b=-j, i1=i, s1=1, i2=i - 1, s2=-1))
                basis.append(BasisFunction(b=j, i1=i, s1=-1, i2=i - 1, s2=1))
    return basis


def initial_weights(n_basis: int) -> np.ndarray:
    """Convex starting weights: 0 on the bias term, 1 everywhere else."""
    c = np.ones(n_basis)
    c[0] = 0.0
    return c


class SurrogateModel:
    """A weighted sum of fixed ReLU basis functions over an integer box.

    Everything except the weight vector ``c`` is immutable after
    construction; ``evaluate``/``gradient``/``activations`` are pure, so
    concurrent reads are safe as long as no writer is replacing ``c``.
    """

    def __init__(self, basis, lower, upper, c=None):
        lower, upper = _check_bounds(lower, upper)
        self.lower = lower
        self.upper = upper
        self.d = lower.size
        self.basis = tuple(basis)
        if not self.basis:
            raise ValueError("empty basis")
        n = len(self.basis)
        # Packed sparse form; missing slots point at a zero pad appended to x,
        # which keeps evaluation a single gather with no branching.
        pad = self.d
        self._i1 = np.array([f.i1 if f.i1 >= 0 else pad for f in self.basis])
        self._i2 = np.array([f.i2 if f.i2 >= 0 else pad for f in self.basis])
        self._s1 = np.array([float(f.s1) for f in self.basis])
        self._s2 = np.array([float(f.s2) for f in self.basis])
        self._b = np.array([float(f.b) for f in self.basis])
        if np.any(self._i1 > pad) or np.any(self._i2 > pad):
            raise ValueError("basis function references a dimension outside the box")
        self.c = initial_weights(n) if c is None else np.asarray(c, dtype=float).copy()
        if self.c.shape != (n,):
            raise ValueError(f"weight vector must have length {n}")

    @classmethod
    def basic(cls, lower, upper, c=None) -> "SurrogateModel":
        lower, upper = _check_bounds(lower, upper)
        return cls(build_basic_basis(lower.size, lower, upper), lower, upper, c)

    @classmethod
    def advanced(cls, lower, upper, c=None) -> "SurrogateModel":
        lower, upper = _check_bounds(lower, upper)
        return cls(build_advanced_basis(lower.size, lower, upper), lower, upper, c)

    def __len__(self) -> int:
        return len(self.basis)

    def _as_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.d},)")
        return x

    def linear_args(self, x) -> np.ndarray:
        """z_k(x) = w_k . x + b_k for every basis function."""
        xp = np.append(self._as_point(x), 0.0)
        return self._s1 * xp[self._i1] + self._s2 * xp[self._i2] + self._b

    def activations(self, x) -> np.ndarray:
        """ReLU outputs max(0, z_k(x)); the regressor row used for fitting."""
        return np.maximum(self.linear_args(x), 0.0)

    def evaluate(self, x) -> float:
        return float(self.c @ self.activations(x))

    def gradient(self, x) -> np.ndarray:
        """Analytical gradient, with slope 0.5 exactly on a kink (z_k = 0)."""
        z = self.linear_args(x)
        sigma = np.where(z > 0.0, 1.0, np.where(z < 0.0, 0.0, 0.5))
        contrib = self.c * sigma
        g = np.zeros(self.d + 1)
        np.add.at(g, self._i1, contrib * self._s1)
        np.add.at(g, self._i2, contrib * self._s2)
        return g[: self.d]

    def lipschitz_bound(self) -> float:
        """sum_k |c_k| * ||w_k||_2, a global Lipschitz constant for g."""
        wnorm = np.sqrt(self._s1**2 + self._s2**2)
        return float(np.abs(self.c) @ wnorm)

    def dump_rows(self):
        """Rows (k, i1, s1, i2, s2, b, c_k) of the debug CSV format."""
        for k, f in enumerate(self.basis):
            yield (k, f.i1, f.s1, f.i2, f.s2, f.b, float(self.c[k]))
