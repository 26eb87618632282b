"""Achievement scalarizing function and ideal/nadir weights."""

from dataclasses import dataclass

import numpy as np

from rmbo.errors import DegenerateBounds, InvalidArgument


def weights_from_bounds(ideal, nadir):
    """``w_i = 1 / (nadir_i - ideal_i)``."""
    ideal = np.asarray(ideal, dtype=float)
    nadir = np.asarray(nadir, dtype=float)
    if ideal.shape != nadir.shape:
        raise InvalidArgument("ideal and nadir must have the same length")
    rng = nadir - ideal
    if not np.all(rng > 0):
        bad = np.flatnonzero(~(rng > 0)).tolist()
        raise DegenerateBounds(f"nadir must exceed ideal in every objective; offending indices {bad}")
    return 1.0 / rng


@dataclass(frozen=True)
class PreferenceSpec:
    """Reference point plus the normalization derived from ideal/nadir.

    A single objective is accepted so the multi-surrogate machinery can be
    checked against its Gaussian special case.
    """

    reference_point: np.ndarray
    ideal: np.ndarray
    nadir: np.ndarray
    rho: float = 0.0

    def __post_init__(self):
        for name in ("reference_point", "ideal", "nadir"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        m = self.reference_point.size
        if self.ideal.size != m or self.nadir.size != m:
            raise InvalidArgument("reference point, ideal and nadir lengths differ")
        if self.rho < 0:
            raise InvalidArgument("rho must be nonnegative")
        object.__setattr__(self, "weights", weights_from_bounds(self.ideal, self.nadir))

    @property
    def n_obj(self):
        return self.reference_point.size


def asf_value(f, spec):
    """ASF of one objective vector, or of each row of a 2-D array."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != spec.n_obj:
        raise InvalidArgument(f"objective vector has length {f.shape[-1]}, expected {spec.n_obj}")
    terms = spec.weights * (f - spec.reference_point)
    g = np.max(terms, axis=-1)
    if spec.rho:
        g = g + spec.rho * np.sum(terms, axis=-1)
    return g if g.ndim else float(g)


def tchebycheff(f, weights, ideal):
    """Weighted Tchebycheff ``max_i w_i (f_i - z_i)`` around the ideal point."""
    f = np.asarray(f, dtype=float)
    g = np.max(np.asarray(weights) * (f - np.asarray(ideal)), axis=-1)
    return g if g.ndim else float(g)
