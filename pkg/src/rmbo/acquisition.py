"""Expected improvement for minimization, in three flavors.

* closed form under a Gaussian predictive (mono-surrogate);
* Monte Carlo under a fitted Gumbel (multi-surrogate);
* closed form under the Laplace Gaussianization of the ASF density.
"""

import numpy as np
from scipy.special import ndtr

from rmbo import _kernels
from rmbo.errors import InvalidArgument

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def ei_closed_form(mu, sigma, best):
    """``(best - mu) Phi(u) + sigma phi(u)``, ``u = (best - mu)/sigma``.

    Falls back to ``max(0, best - mu)`` where ``sigma == 0``.  Accepts
    scalars or broadcastable arrays.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise InvalidArgument("sigma must be nonnegative")
    diff = best - mu
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    with np.errstate(over="ignore"):
        u = diff / safe
        ei = diff * ndtr(u) + safe * _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    out = np.where(pos, np.maximum(ei, 0.0), np.maximum(diff, 0.0))
    return out if out.ndim else float(out)


def gumbel_base_draws(n_mc, rng):
    """Standard Gumbel variates ``-log(-log u)``; shared across candidates for CRN."""
    if n_mc < 1:
        raise InvalidArgument("n_mc must be >= 1")
    u = rng.random(n_mc)
    # u == 0 has probability 2^-53 per draw but would give -inf
    u = np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
    return -np.log(-np.log(u))


def ei_monte_carlo(q, best, n_mc=1000, rng=None, base=None):
    """Monte-Carlo EI of a Gumbel-distributed scalarized value.

    Either ``rng`` (fresh draws) or precomputed standard-Gumbel ``base`` draws
    (common random numbers) must be given.
    """
    if base is None:
        if rng is None:
            raise InvalidArgument("pass rng or base draws")
        base = gumbel_base_draws(n_mc, rng)
    g = q.loc + q.scale * base
    return float(np.mean(np.maximum(0.0, best - g)))


def ei_monte_carlo_batch(loc, scale, best, base):
    """Row-wise MC EI for arrays of Gumbel parameters sharing ``base`` draws."""
    return _kernels.ei_gumbel(loc, scale, best, base)


def ei_laplace(lp, best):
    """Closed-form EI under ``N(g0, 1/A)``."""
    return ei_closed_form(lp.mode, lp.curvature**-0.5, best)
