"""Ref Solution, ASF distance and nondominated filtering."""

from dataclasses import dataclass

import numpy as np

from rmbo.errors import InvalidArgument
from rmbo.scalarization import asf_value


@dataclass(frozen=True)
class RefSolution:
    objective_vector: np.ndarray
    asf_value: float
    index: int = -1


def ref_solution(front, pref):
    """Front point minimizing the ASF; ties go to the lowest index."""
    front = np.atleast_2d(np.asarray(front, dtype=float))
    if front.shape[0] == 0 or front.size == 0:
        raise InvalidArgument("front sample is empty")
    g = asf_value(front, pref)
    i = int(np.argmin(g))
    return RefSolution(front[i].copy(), float(g[i]), i)


def asf_distance(f, ref, pref):
    """``|asf(f) - g*|``; accepts one vector or rows of a 2-D array."""
    out = np.abs(np.asarray(asf_value(f, pref)) - ref.asf_value)
    return out if out.ndim else float(out)


def nondominated_mask(points, chunk=256):
    """Boolean mask of rows not dominated by any other row (minimization)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    N = P.shape[0]
    mask = np.ones(N, dtype=bool)
    for start in range(0, N, chunk):
        block = P[start : start + chunk]
        le = np.all(P[None, :, :] <= block[:, None, :], axis=2)
        lt = np.any(P[None, :, :] < block[:, None, :], axis=2)
        mask[start : start + chunk] = ~np.any(le & lt, axis=1)
    return mask


def nondominated_filter(points):
    """Rows not dominated by any other row, in input order; duplicates kept."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return P.reshape(0, P.shape[-1] if P.ndim > 1 else 0)
    P = np.atleast_2d(P)
    return P[nondominated_mask(P)]
