"""Real-coded genetic algorithm for maximizing acquisition functions.

Binary tournament selection, simulated binary crossover (SBX), polynomial
mutation and single-individual elitism, all on a box.  Random draws are taken
in fixed shapes every generation so a seed fixes the whole trajectory.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from rmbo.errors import InvalidArgument


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 50
    generations: int = 100
    crossover_prob: float = 0.9
    mutation_prob: Optional[float] = None  # None -> 1/n
    sbx_eta: float = 15.0
    pm_eta: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise InvalidArgument("population_size must be even and >= 4")
        if self.generations < 1:
            raise InvalidArgument("generations must be >= 1")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise InvalidArgument("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise InvalidArgument("mutation_prob must lie in [0, 1]")
        if self.sbx_eta <= 0 or self.pm_eta <= 0:
            raise InvalidArgument("distribution indices must be positive")


def _sbx(p1, p2, lower, upper, eta, pc, rng):
    P, n = p1.shape
    u = rng.random((P, n))
    do_var = rng.random((P, n)) < 0.5
    swap = rng.random((P, n)) < 0.5
    do_pair = rng.random(P) < pc

    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    span = y2 - y1
    active = do_pair[:, None] & do_var & (span > 1e-14)
    span_safe = np.where(active, span, 1.0)
    inv = 1.0 / (eta + 1.0)

    def betaq(beta):
        alpha = 2.0 - beta ** -(eta + 1.0)
        return np.where(
            u <= 1.0 / alpha,
            (u * alpha) ** inv,
            (1.0 / np.maximum(2.0 - u * alpha, 1e-300)) ** inv,
        )

    beta_lo = 1.0 + 2.0 * (y1 - lower) / span_safe
    beta_hi = 1.0 + 2.0 * (upper - y2) / span_safe
    c1 = 0.5 * ((y1 + y2) - betaq(beta_lo) * span_safe)
    c2 = 0.5 * ((y1 + y2) + betaq(beta_hi) * span_safe)
    c1 = np.clip(c1, lower, upper)
    c2 = np.clip(c2, lower, upper)
    o1 = np.where(swap, c2, c1)
    o2 = np.where(swap, c1, c2)
    return np.where(active, o1, p1), np.where(active, o2, p2)


def _polynomial_mutation(x, lower, upper, eta, pm, rng):
    P, n = x.shape
    do = rng.random((P, n)) < pm
    r = rng.random((P, n))
    width = upper - lower
    d1 = (x - lower) / width
    d2 = (upper - x) / width
    inv = 1.0 / (eta + 1.0)
    left = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1) ** (eta + 1.0)
    right = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2) ** (eta + 1.0)
    dq = np.where(r < 0.5, left ** inv - 1.0, 1.0 - right ** inv)
    y = np.clip(x + dq * width, lower, upper)
    return np.where(do, y, x)


def maximize(objective, bounds, cfg=None, batch=False, history=None):
    """Maximize ``objective`` over a box.

    Parameters
    ----------
    objective : callable
        Maps an n-vector to a float, or, with ``batch=True``, a ``(P, n)``
        array to a length-P array.
    bounds : array-like, shape (n, 2)
        Lower and upper bound per variable.
    cfg : GAConfig, optional
    batch : bool
        Whether ``objective`` is vectorized over rows.
    history : list, optional
        If given, the best-so-far value is appended after every generation.

    Returns
    -------
    x_best, value : ndarray, float
        Best point ever evaluated and its objective value.
    """
    cfg = cfg or GAConfig()
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    lower, upper = bounds[:, 0], bounds[:, 1]
    if not np.all(lower < upper):
        raise InvalidArgument("every lower bound must be below its upper bound")
    n = lower.size
    pm = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / n
    P = cfg.population_size
    rng = np.random.default_rng(cfg.seed)

    if batch:
        evaluate = lambda pop: np.asarray(objective(pop), dtype=float).reshape(-1)
    else:
        evaluate = lambda pop: np.array([float(objective(row)) for row in pop])

    def sanitize(v):
        return np.where(np.isnan(v), -np.inf, v)

    pop = lower + (upper - lower) * rng.random((P, n))
    fit = sanitize(evaluate(pop))
    k = int(np.argmax(fit))
    best_x, best_v = pop[k].copy(), fit[k]

    for _ in range(cfg.generations):
        a = rng.integers(0, P, size=(P, 2))
        winners = np.where(fit[a[:, 0]] >= fit[a[:, 1]], a[:, 0], a[:, 1])
        parents = pop[winners]
        c1, c2 = _sbx(parents[0::2], parents[1::2], lower, upper, cfg.sbx_eta, cfg.crossover_prob, rng)
        children = np.empty_like(parents)
        children[0::2], children[1::2] = c1, c2
        children = _polynomial_mutation(children, lower, upper, cfg.pm_eta, pm, rng)
        children = np.clip(children, lower, upper)

        cfit = sanitize(evaluate(children))
        k = int(np.argmax(cfit))
        if cfit[k] > best_v:
            best_x, best_v = children[k].copy(), cfit[k]
        # elitism: the best-ever individual replaces the worst child
        w = int(np.argmin(cfit))
        children[w], cfit[w] = best_x, best_v
        pop, fit = children, cfit
        if history is not None:
            history.append(float(best_v))

    return best_x, float(best_v)
