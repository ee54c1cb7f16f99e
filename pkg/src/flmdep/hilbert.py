"""Discretized L2 numerics: grids with quadrature weights, inner products,
norms and sample centering.

Curves are plain 1-D float arrays aligned to a :class:`Grid`; a sample of
curves is an ``(n, p)`` array whose rows are curves. Every array stored on
a :class:`Grid` or :class:`FunctionalSample` is a read-only copy, so the
objects can be shared freely between worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from flmdep.errors import AlignmentError, FlmdepError

QUADRATURE_RULES = ("trapezoid", "riemann")


def _frozen(values, ndim):
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise AlignmentError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def trapezoid_weights(points):
    points = np.asarray(points, dtype=float)
    dt = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def riemann_weights(points):
    """Left-endpoint rule: w_k = t_{k+1} - t_k, last node gets 0."""
    points = np.asarray(points, dtype=float)
    w = np.zeros_like(points)
    w[:-1] = np.diff(points)
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Discretization nodes of a compact interval plus quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _frozen(self.points, 1)
        weights = _frozen(self.weights, 1)
        if points.size < 2:
            raise FlmdepError("a grid needs at least 2 points")
        if weights.shape != points.shape:
            raise AlignmentError(
                f"{weights.size} weights for {points.size} grid points"
            )
        if not np.all(np.isfinite(points)) or np.any(np.diff(points) <= 0):
            raise FlmdepError("grid points must be finite and strictly increasing")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise FlmdepError("quadrature weights must be finite and nonnegative")
        length = points[-1] - points[0]
        if abs(weights.sum() - length) > 1e-12 * max(length, 1.0):
            raise FlmdepError(
                f"weights sum to {weights.sum()!r}, domain length is {length!r}"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_points(cls, points, rule="trapezoid"):
        if rule == "trapezoid":
            return cls(points, trapezoid_weights(points))
        if rule == "riemann":
            return cls(points, riemann_weights(points))
        raise FlmdepError(f"unknown quadrature rule {rule!r}; use one of {QUADRATURE_RULES}")

    @classmethod
    def uniform(cls, p, start=0.0, stop=1.0, rule="trapezoid"):
        return cls.from_points(np.linspace(start, stop, p), rule=rule)

    @property
    def size(self):
        return self.points.size

    @property
    def length(self):
        return float(self.points[-1] - self.points[0])

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )

    __hash__ = None


def _check_curve(f, grid, name="curve"):
    f = np.asarray(f, dtype=float)
    if f.shape[-1:] != (grid.size,):
        raise AlignmentError(
            f"{name} has {f.shape[-1] if f.ndim else 0} values, grid has {grid.size} points"
        )
    return f


def inner_product(f, g, grid):
    """Quadrature approximation of the L2 inner product on ``grid``.

    Either argument may be a stack of curves (rows); the result then
    broadcasts like ``f * g`` with the last axis integrated out.
    """
    f = _check_curve(f, grid, "f")
    g = _check_curve(g, grid, "g")
    return np.sum(f * g * grid.weights, axis=-1)


def norm(f, grid):
    f = _check_curve(f, grid)
    sq = np.sum(f * f * grid.weights, axis=-1)
    return np.sqrt(np.maximum(sq, 0.0))


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves on a common grid and their scalar responses."""

    grid: Grid
    curves: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        curves = _frozen(self.curves, 2)
        responses = _frozen(self.responses, 1)
        n, p = curves.shape
        if n < 2:
            raise FlmdepError(f"need at least 2 observations, got {n}")
        if p != self.grid.size:
            raise AlignmentError(f"curves have {p} columns, grid has {self.grid.size} points")
        if responses.size != n:
            raise AlignmentError(f"{n} curves but {responses.size} responses")
        if not np.all(np.isfinite(curves)):
            bad = np.argwhere(~np.isfinite(curves))[0]
            raise FlmdepError(f"non-finite curve value at row {bad[0]}, column {bad[1]}")
        if not np.all(np.isfinite(responses)):
            raise FlmdepError("non-finite response value")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "responses", responses)

    @property
    def n(self):
        return self.curves.shape[0]

    @property
    def p(self):
        return self.curves.shape[1]

    def with_responses(self, responses):
        return FunctionalSample(self.grid, self.curves, responses)

    def __eq__(self, other):
        if not isinstance(other, FunctionalSample):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.curves, other.curves)
            and np.array_equal(self.responses, other.responses)
        )

    __hash__ = None


def center(sample):
    """Subtract the mean curve and the mean response."""
    curves = sample.curves - sample.curves.mean(axis=0)
    responses = sample.responses - sample.responses.mean()
    return FunctionalSample(sample.grid, curves, responses)
