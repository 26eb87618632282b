"""Distribution of the ASF when each objective has an independent Gaussian posterior.

With ``f_i ~ N(mu_i, sigma_i^2)`` the scalarized value
``g = max_i w_i (f_i - z*_i)`` is the maximum of independent Gaussians
``N(m_i, s_i^2)``, ``m_i = w_i (mu_i - z*_i)``, ``s_i = w_i sigma_i``.  This
module gives its exact density, a sampler, a Gumbel approximation fitted by
maximum likelihood, and a Laplace (Gaussian-at-the-mode) approximation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from rmbo import _kernels
from rmbo.errors import FitFailure, InvalidArgument

SIGMA_FLOOR = 1e-9
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class MaxGaussianParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.means, dtype=float))
        s = np.atleast_1d(np.asarray(self.stds, dtype=float))
        if m.shape != s.shape or m.ndim != 1 or m.size < 1:
            raise InvalidArgument("means and stds must be equal-length nonempty vectors")
        if not np.all(s > 0):
            raise InvalidArgument("scaled standard deviations must be positive")
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "stds", s)

    @classmethod
    def from_posterior(cls, mu, sigma, pref):
        """Shift/scale GP posteriors by the preference; sigma floored at 1e-9."""
        mu = np.asarray(mu, dtype=float)
        sigma = np.maximum(np.asarray(sigma, dtype=float), SIGMA_FLOOR)
        w = pref.weights
        return cls(w * (mu - pref.reference_point), w * sigma)

    @property
    def size(self):
        return self.means.size


@dataclass(frozen=True)
class GumbelParams:
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidArgument(f"Gumbel scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class LaplaceParams:
    mode: float
    curvature: float

    def __post_init__(self):
        if not self.curvature > 0:
            raise InvalidArgument(f"Laplace curvature must be positive, got {self.curvature}")

    @property
    def std(self):
        return self.curvature**-0.5


def shifted_params(mu, sigma, pref):
    """Batched ``(means, stds)`` arrays of shape ``(B, m)`` from posteriors."""
    sigma = np.maximum(np.asarray(sigma, dtype=float), SIGMA_FLOOR)
    w = pref.weights
    return w * (np.asarray(mu, dtype=float) - pref.reference_point), w * sigma


# ---------------------------------------------------------------------------
# exact density
# ---------------------------------------------------------------------------


def _logsumexp(a, axis=-1):
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis)) + np.squeeze(amax, axis=axis)
    return out


def max_logpdf(g, p):
    """Log density of the max of independent Gaussians, evaluated in log space."""
    g = np.asarray(g, dtype=float)
    t = (g[..., None] - p.means) / p.stds
    log_cdf = log_ndtr(t)
    log_terms = -0.5 * t * t - _LOG_SQRT_2PI - log_cdf - np.log(p.stds)
    out = _logsumexp(log_terms) + np.sum(log_cdf, axis=-1)
    return out if out.ndim else float(out)


def max_pdf(g, p):
    """``[sum_i phi(t_i) / (s_i Phi(t_i))] * prod_i Phi(t_i)``, ``t_i = (g - m_i)/s_i``."""
    out = np.exp(max_logpdf(g, p))
    return out if np.ndim(out) else float(out)


def max_cdf(g, p):
    g = np.asarray(g, dtype=float)
    out = np.prod(ndtr((g[..., None] - p.means) / p.stds), axis=-1)
    return out if out.ndim else float(out)


def max_sample(p, count, rng):
    """Draw ``count`` values of ``max_i N(m_i, s_i^2)``."""
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    z = rng.standard_normal((count, p.size))
    return _kernels.max_gaussian(p.means[None, :], p.stds[None, :], z)[0]


def max_sample_crn(means, stds, z):
    """Batched samples from fixed standard-normal draws ``z`` (common random numbers)."""
    return _kernels.max_gaussian(means, stds, z)


# ---------------------------------------------------------------------------
# Gumbel approximation
# ---------------------------------------------------------------------------


def fit_gumbel(samples):
    """Maximum-likelihood Gumbel fit of 1-D samples.

    Solves ``beta = mean(g) - sum(g e^{-g/beta}) / sum(e^{-g/beta})`` by a
    relaxed fixed-point iteration (bisection fallback), then
    ``alpha = -beta log(mean(e^{-g/beta}))``.

    Raises
    ------
    FitFailure
        On zero-variance samples or non-convergence.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 10:
        raise InvalidArgument("fit_gumbel needs at least 10 samples")
    alpha, beta, status = _kernels.gumbel_fit(samples[None, :])
    if status[0] == _kernels.FIT_DEGENERATE:
        raise FitFailure("degenerate samples: zero variance")
    if status[0] != _kernels.FIT_OK:
        raise FitFailure("Gumbel scale equation did not converge")
    return GumbelParams(float(alpha[0]), float(beta[0]))


def fit_gumbel_batch(samples):
    """Row-wise fit; returns ``(loc, scale, ok)`` arrays."""
    alpha, beta, status = _kernels.gumbel_fit(samples)
    return alpha, beta, status == _kernels.FIT_OK


def gumbel_pdf(g, q):
    t = (np.asarray(g, dtype=float) - q.loc) / q.scale
    with np.errstate(over="ignore"):
        out = np.exp(-(t + np.exp(-t))) / q.scale
    return out if out.ndim else float(out)


def gumbel_cdf(g, q):
    t = (np.asarray(g, dtype=float) - q.loc) / q.scale
    with np.errstate(over="ignore"):
        out = np.exp(-np.exp(-t))
    return out if out.ndim else float(out)


def gumbel_loglik(samples, q):
    t = (np.asarray(samples, dtype=float) - q.loc) / q.scale
    return float(-t.size * math.log(q.scale) - np.sum(t) - np.sum(np.exp(-t)))


def gumbel_quantile(u, q):
    """Inverse CDF, ``alpha - beta log(-log u)``."""
    out = q.loc - q.scale * np.log(-np.log(np.asarray(u, dtype=float)))
    return out if out.ndim else float(out)


def gumbel_sample(q, count, rng):
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    return gumbel_quantile(rng.random(count), q)


# ---------------------------------------------------------------------------
# Laplace approximation
# ---------------------------------------------------------------------------


_MILLS_ASYMPTOTIC = -40.0


def _inverse_mills(t):
    """``log(phi/Phi)`` and ``phi/Phi`` at ``t``.

    Far in the left tail the direct form cancels two huge numbers, so the
    asymptotic series ``-t / (1 - t^-2 + 3 t^-4 - 15 t^-6 + 105 t^-8)`` is used instead.
    """
    far = t < _MILLS_ASYMPTOTIC
    tn = np.where(far, _MILLS_ASYMPTOTIC, t)
    log_r = -0.5 * tn * tn - _LOG_SQRT_2PI - log_ndtr(tn)
    tf = np.where(far, t, _MILLS_ASYMPTOTIC)
    u = 1.0 / (tf * tf)
    r_far = -tf / (1.0 - u + 3.0 * u * u - 15.0 * u**3 + 105.0 * u**4)
    r = np.where(far, r_far, np.exp(log_r))
    log_r = np.where(far, np.log(r_far), log_r)
    return log_r, r


def _log_pdf_derivs(g, means, stds):
    """First and second derivatives of ``log max_pdf``; broadcasts over leading axes.

    ``log p = log(sum_i h_i) + sum_i log Phi(t_i)`` with
    ``h_i = phi(t_i) / (s_i Phi(t_i))``.
    """
    t = (g[..., None] - means) / stds
    log_r, r = _inverse_mills(t)
    log_h = log_r - np.log(stds)
    # normalized weights h_i / H, shifted to survive underflow in the right tail
    lw = log_h - np.max(log_h, axis=-1, keepdims=True)
    w = np.exp(lw)
    w = w / np.sum(w, axis=-1, keepdims=True)
    tr = t + r
    h1 = np.sum(w * (-tr / stds), axis=-1)  # H'/H
    h2 = np.sum(w * (tr * tr - 1.0 + r * tr) / stds**2, axis=-1)  # H''/H
    d_logcdf = np.sum(r / stds, axis=-1)
    d2_logcdf = np.sum(-r * tr / stds**2, axis=-1)
    return h1 + d_logcdf, h2 - h1 * h1 + d2_logcdf


def log_pdf_grad(g, p):
    """``(d log p / dg, d^2 log p / dg^2)`` at ``g``."""
    d1, d2 = _log_pdf_derivs(np.asarray(g, dtype=float), p.means, p.stds)
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


LAPLACE_MAXITER = 100
LAPLACE_TOL = 1e-10


def _newton_mode(means, stds, g):
    """Safeguarded Newton search for a local mode from starting points ``g``.

    Newton steps that leave the current bracket, or are taken where the log
    density is not concave, are replaced by bisection on the sign of the
    first derivative; the bracket always has a rising left end and falling
    right end, so bisection lands on a local maximum.
    """
    s_ref = stds.max(axis=1)
    lo = means.min(axis=1) - 6.0 * s_ref
    hi = means.max(axis=1) + 6.0 * s_ref
    g = g.copy()
    B = g.size
    done = np.zeros(B, dtype=bool)
    bisect_only = np.zeros(B, dtype=bool)
    d2 = np.full(B, np.nan)

    for _ in range(LAPLACE_MAXITER):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        ga = g[act]
        d1a, d2a = _log_pdf_derivs(ga, means[act], stds[act])
        d2[act] = d2a
        sr = s_ref[act]
        small = np.abs(d1a) * sr < LAPLACE_TOL
        concave = d2a < 0
        finished = small & concave
        # a stationary point that is not a maximum: continue by bisection only
        bisect_only[act[small & ~concave]] = True

        rising = d1a > 0
        lo_a = np.where(rising, ga, lo[act])
        hi_a = np.where(rising, hi[act], ga)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = ga - d1a / d2a
        ok_newton = concave & (newton > lo_a) & (newton < hi_a) & ~bisect_only[act]
        new = np.where(ok_newton, newton, 0.5 * (lo_a + hi_a))
        tiny = np.abs(new - ga) <= 1e-15 * (np.abs(ga) + sr)
        finished |= tiny & concave

        lo[act], hi[act] = lo_a, hi_a
        g[act] = np.where(finished, ga, new)
        done[act[finished]] = True

    return g, d2, done & (d2 < 0)


def laplace_fit_batch(means, stds):
    """Mode and curvature of each row's density; returns ``(mode, curvature, ok)``.

    The density can be bimodal when a narrow component sits below a wide
    one, so Newton is started from every component mean (largest first) and
    the local mode with the highest log density is kept.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    stds = np.atleast_2d(np.asarray(stds, dtype=float))
    starts = -np.sort(-means, axis=1)
    best_g, best_d2, best_ok = _newton_mode(means, stds, starts[:, 0])
    if means.shape[1] == 1:
        return best_g, -best_d2, best_ok
    best_lp = np.where(best_ok, _row_logpdf(best_g, means, stds), -np.inf)
    for j in range(1, means.shape[1]):
        g, d2, ok = _newton_mode(means, stds, starts[:, j])
        lp = np.where(ok, _row_logpdf(g, means, stds), -np.inf)
        # strict improvement beyond rounding keeps the earlier start on ties
        better = lp > best_lp + 1e-12 * np.maximum(1.0, np.abs(best_lp))
        best_g = np.where(better, g, best_g)
        best_d2 = np.where(better, d2, best_d2)
        best_lp = np.where(better, lp, best_lp)
        best_ok |= ok
    return best_g, -best_d2, best_ok


def _row_logpdf(g, means, stds):
    t = (g[:, None] - means) / stds
    log_cdf = log_ndtr(t)
    log_terms = -0.5 * t * t - _LOG_SQRT_2PI - log_cdf - np.log(stds)
    return _logsumexp(log_terms) + np.sum(log_cdf, axis=-1)


def laplace_fit(p):
    """Mode ``g0`` and curvature ``A = -d^2 log p(g0)`` of the max-of-Gaussians density.

    Raises
    ------
    FitFailure
        If no Newton start converges in 100 iterations.
    """
    g0, A, ok = laplace_fit_batch(p.means[None, :], p.stds[None, :])
    if not ok[0]:
        raise FitFailure(f"Laplace mode search did not converge (last g={g0[0]:.6g})")
    return LaplaceParams(float(g0[0]), float(A[0]))
