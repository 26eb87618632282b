"""DTLZ2/5/7 benchmarks, Pareto-front samplers, Latin hypercube designs and
reference-point grids.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from rmbo.errors import InvalidArgument
from rmbo.metrics import nondominated_filter

PROBLEMS = ("DTLZ2", "DTLZ5", "DTLZ7")


def _check_box(X, lower, upper):
    if X.shape[-1] != lower.size:
        raise InvalidArgument(f"decision vector has length {X.shape[-1]}, expected {lower.size}")
    if np.any(X < lower) or np.any(X > upper) or not np.all(np.isfinite(X)):
        raise InvalidArgument("decision vector outside the problem bounds")


def _spherical(theta, g, m):
    """DTLZ2-style objectives from position angles ``theta`` (B, m-1) and distance ``g``."""
    B = theta.shape[0]
    F = np.empty((B, m))
    cos = np.cos(theta)
    sin = np.sin(theta)
    for i in range(m):
        f = 1.0 + g
        for j in range(m - 1 - i):
            f = f * cos[:, j]
        if i > 0:
            f = f * sin[:, m - 1 - i]
        F[:, i] = f
    return F


def dtlz2(X, m):
    X = np.atleast_2d(X)
    g = np.sum((X[:, m - 1 :] - 0.5) ** 2, axis=1)
    return _spherical(X[:, : m - 1] * (math.pi / 2), g, m)


def dtlz5(X, m):
    X = np.atleast_2d(X)
    g = np.sum((X[:, m - 1 :] - 0.5) ** 2, axis=1)
    theta = np.empty((X.shape[0], m - 1))
    theta[:, 0] = X[:, 0] * (math.pi / 2)
    if m > 2:
        theta[:, 1:] = (math.pi / (4.0 * (1.0 + g)))[:, None] * (1.0 + 2.0 * g[:, None] * X[:, 1 : m - 1])
    return _spherical(theta, g, m)


def dtlz7(X, m):
    X = np.atleast_2d(X)
    k = X.shape[1] - m + 1
    F = np.empty((X.shape[0], m))
    F[:, : m - 1] = X[:, : m - 1]
    g = 1.0 + 9.0 / k * np.sum(X[:, m - 1 :], axis=1)
    fp = F[:, : m - 1]
    h = m - np.sum(fp / (1.0 + g)[:, None] * (1.0 + np.sin(3.0 * math.pi * fp)), axis=1)
    F[:, m - 1] = (1.0 + g) * h
    return F


_EVAL = {"DTLZ2": dtlz2, "DTLZ5": dtlz5, "DTLZ7": dtlz7}


def _position_grid(m, count):
    """Grid over the m-1 position variables with at least ``count`` nodes."""
    side = max(2, math.ceil(count ** (1.0 / (m - 1)) - 1e-9))
    axes = [np.linspace(0.0, 1.0, side)] * (m - 1)
    P = np.array(list(itertools.product(*axes))) if m > 2 else axes[0][:, None]
    return P


@dataclass(frozen=True)
class ProblemSpec:
    """A DTLZ instance on the unit box."""

    name: str
    n_var: int
    n_obj: int

    def __post_init__(self):
        if self.name not in _EVAL:
            raise InvalidArgument(f"unknown problem {self.name!r}; choose from {PROBLEMS}")
        if self.n_obj < 2 or self.n_var < self.n_obj:
            raise InvalidArgument("need n_obj >= 2 and n_var >= n_obj")

    @property
    def k(self):
        return self.n_var - self.n_obj + 1

    @property
    def lower(self):
        return np.zeros(self.n_var)

    @property
    def upper(self):
        return np.ones(self.n_var)

    @property
    def has_front(self):
        return True

    def evaluate(self, x):
        """Objective vector of one point, or a (B, m) array for a (B, n) batch."""
        x = np.asarray(x, dtype=float)
        _check_box(x, self.lower, self.upper)
        F = _EVAL[self.name](x, self.n_obj)
        return F[0] if x.ndim == 1 else F

    def sample_front(self, count=10_001):
        if count < 100:
            raise InvalidArgument("front sample needs at least 100 points")
        m = self.n_obj
        if self.name == "DTLZ5" and m > 2:
            # the front is a curve parameterized by x_1 alone
            P = np.full((count, m - 1), 0.5)
            P[:, 0] = np.linspace(0.0, 1.0, count)
        elif m == 2:
            P = np.linspace(0.0, 1.0, count)[:, None]
        else:
            P = _position_grid(m, count)
        dist = 0.0 if self.name == "DTLZ7" else 0.5
        X = np.hstack([P, np.full((P.shape[0], self.k), dist)])
        F = _EVAL[self.name](X, m)
        if self.name == "DTLZ7":
            F = nondominated_filter(F)
        return F

    @cached_property
    def _front_bounds(self):
        F = self.sample_front(10_001 if self.n_obj == 2 else 10_000)
        return F.min(axis=0), F.max(axis=0)

    @property
    def front_extremes(self):
        """Componentwise maxima over the Pareto front."""
        if self.name in ("DTLZ2", "DTLZ5"):
            return np.ones(self.n_obj)
        return self._front_bounds[1].copy()

    @property
    def ideal(self):
        if self.name in ("DTLZ2", "DTLZ5"):
            return np.zeros(self.n_obj)
        return self._front_bounds[0].copy()

    @property
    def nadir(self):
        """Normalization nadir.

        DTLZ2/5 use the worst attainable objective value ``1 + 0.25 k`` so
        points off the front still normalize into a finite range; DTLZ7 uses
        the front maxima.
        """
        if self.name in ("DTLZ2", "DTLZ5"):
            return np.full(self.n_obj, 1.0 + 0.25 * self.k)
        return self._front_bounds[1].copy()


def make_problem(name, n_var, n_obj):
    return ProblemSpec(str(name).upper(), int(n_var), int(n_obj))


@dataclass(frozen=True)
class FunctionProblem:
    """Any box-constrained vector function, for demos and tests."""

    name: str
    fn: Callable
    lower: np.ndarray
    upper: np.ndarray
    ideal: np.ndarray
    nadir: np.ndarray
    front: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_var(self):
        return np.asarray(self.lower).size

    @property
    def n_obj(self):
        return np.asarray(self.ideal).size

    @property
    def has_front(self):
        return self.front is not None

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        _check_box(x, np.asarray(self.lower), np.asarray(self.upper))
        if x.ndim == 1:
            return np.asarray(self.fn(x), dtype=float)
        return np.array([self.fn(row) for row in x], dtype=float)

    def sample_front(self, count=10_001):
        if self.front is None:
            raise InvalidArgument(f"problem {self.name!r} has no front sampler")
        return np.asarray(self.front, dtype=float)


def lhs_design(n, count, rng):
    """Latin hypercube on ``[0, 1]^n``: one point per stratum per dimension."""
    if count < 1 or n < 1:
        raise InvalidArgument("need count >= 1 and n >= 1")
    X = np.empty((count, n))
    for j in range(n):
        X[:, j] = (rng.permutation(count) + rng.random(count)) / count
    return X


def refpoint_grid(m, count=25, lower=None, upper=None):
    """First ``count`` nodes, in lexicographic order, of a uniform grid with
    ``ceil(count ** (1/m))`` nodes per axis spanning ``[lower, upper]``.

    For 25 points this is a 5x5 grid when m=2 and 25 of the 27 nodes of a
    3x3x3 grid when m=3.
    """
    lower = np.zeros(m) if lower is None else np.asarray(lower, dtype=float)
    upper = np.ones(m) if upper is None else np.asarray(upper, dtype=float)
    if lower.size != m or upper.size != m or not np.all(lower < upper):
        raise InvalidArgument("grid bounds must be m-vectors with lower < upper")
    side = math.ceil(round(count ** (1.0 / m), 9))
    while side**m < count:
        side += 1
    axes = [np.linspace(lower[i], upper[i], side) for i in range(m)]
    nodes = list(itertools.islice(itertools.product(*axes), count))
    return np.array(nodes)
