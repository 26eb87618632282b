"""Hot inner loops of the multi-surrogate acquisition.

Every kernel exists twice: a pure-numpy version (suffix ``_np``) and a
numba ``@njit`` version (suffix ``_nb``).  The public names bind to the numba
versions unless numba is missing or ``RMBO_DISABLE_NUMBA=1`` is set in the
environment before import.  Both paths are tested for agreement.
"""

import math
import os

import numpy as np

_SQRT6_OVER_PI = math.sqrt(6.0) / math.pi
FIT_TOL = 1e-8
FIT_MAXITER = 200
DEGENERATE_REL = 1e-12

FIT_OK = 0
FIT_DEGENERATE = 1
FIT_NOT_CONVERGED = 2

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("RMBO_DISABLE_NUMBA", "0").lower() not in (
    "1",
    "true",
    "yes",
)


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------


def max_gaussian_np(means, stds, z):
    """``out[b, j] = max_i(means[b, i] + stds[b, i] * z[j, i])``."""
    return np.max(means[:, None, :] + stds[:, None, :] * z[None, :, :], axis=2)


def ei_gumbel_np(alpha, beta, best, base):
    """Mean of ``max(0, best - (alpha + beta * base_j))`` per row."""
    g = alpha[:, None] + beta[:, None] * base[None, :]
    return np.mean(np.maximum(0.0, np.asarray(best)[..., None] - g), axis=1)


def scaled_sqdist_np(X1, X2, lengthscales):
    d = (X1[:, None, :] - X2[None, :, :]) / lengthscales
    return np.sum(d * d, axis=2)


def _tilted_moments_np(y, ymin, beta):
    # weights exp(-y/beta) shifted by the row minimum
    e = np.exp(-(y - ymin[:, None]) / beta[:, None])
    s0 = e.sum(axis=1)
    wm = (e * y).sum(axis=1) / s0
    wv = (e * (y - wm[:, None]) ** 2).sum(axis=1) / s0
    return s0, wm, wv


def gumbel_fit_np(samples):
    """Row-wise Gumbel maximum-likelihood fit.

    Returns ``(alpha, beta, status)`` arrays.  Rows are standardized first so
    the convergence test is scale free; the estimating equations are
    location/scale equivariant so the result maps back exactly.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    B, N = samples.shape
    mean = samples.mean(axis=1)
    sd = samples.std(axis=1)
    status = np.zeros(B, dtype=np.int64)
    # constant rows can leave rounding-level spread; treat those as degenerate
    bad = ~(np.isfinite(sd) & (sd > DEGENERATE_REL * np.abs(mean)) & (sd > 0.0))
    status[bad] = FIT_DEGENERATE
    sd_safe = np.where(bad, 1.0, sd)
    y = (samples - mean[:, None]) / sd_safe[:, None]
    ybar = y.mean(axis=1)
    ymin = y.min(axis=1)

    beta = np.full(B, _SQRT6_OVER_PI)
    done = bad.copy()
    for _ in range(FIT_MAXITER):
        active = ~done
        if not active.any():
            break
        b = beta[active]
        _, wm, wv = _tilted_moments_np(y[active], ymin[active], b)
        target = ybar[active] - wm
        # T'(beta) = -wv / beta^2, so this damping is the Newton step on beta - T(beta)
        new = b + (target - b) / (1.0 + wv / (b * b))
        new = np.where(new > 0.0, new, 0.5 * b)
        conv = np.abs(new - b) < FIT_TOL * np.maximum(1.0, np.abs(b))
        beta[active] = new
        idx = np.flatnonzero(active)
        done[idx[conv]] = True

    # bisection fallback on the residual beta - T(beta)
    for r in np.flatnonzero(~done):
        beta[r], ok = _bisect_row_np(y[r], ybar[r], ymin[r])
        if not ok:
            status[r] = FIT_NOT_CONVERGED

    e = np.exp(-(y - ymin[:, None]) / beta[:, None])
    alpha_y = ymin - beta * np.log(e.mean(axis=1))
    alpha = mean + sd_safe * alpha_y
    beta_out = sd_safe * beta
    alpha[status != FIT_OK] = np.nan
    beta_out[status != FIT_OK] = np.nan
    return alpha, beta_out, status


def _bisect_row_np(y, ybar, ymin):
    def resid(b):
        _, wm, _ = _tilted_moments_np(y[None, :], np.array([ymin]), np.array([b]))
        return b - (ybar - wm[0])

    lo, hi = 1e-6, 10.0
    rlo, rhi = resid(lo), resid(hi)
    if not (rlo < 0.0 < rhi):
        return np.nan, False
    for _ in range(FIT_MAXITER):
        mid = 0.5 * (lo + hi)
        if resid(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < FIT_TOL * max(1.0, hi):
            return 0.5 * (lo + hi), True
    return 0.5 * (lo + hi), False


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def max_gaussian_nb(means, stds, z):
        B, m = means.shape
        N = z.shape[0]
        out = np.empty((B, N))
        for b in range(B):
            for j in range(N):
                best = means[b, 0] + stds[b, 0] * z[j, 0]
                for i in range(1, m):
                    v = means[b, i] + stds[b, i] * z[j, i]
                    if v > best:
                        best = v
                out[b, j] = best
        return out

    @numba.njit(cache=True)
    def ei_gumbel_nb(alpha, beta, best, base):
        B = alpha.shape[0]
        N = base.shape[0]
        out = np.empty(B)
        for b in range(B):
            acc = 0.0
            for j in range(N):
                d = best[b] - (alpha[b] + beta[b] * base[j])
                if d > 0.0:
                    acc += d
            out[b] = acc / N
        return out

    @numba.njit(cache=True)
    def scaled_sqdist_nb(X1, X2, lengthscales):
        N1, n = X1.shape
        N2 = X2.shape[0]
        out = np.empty((N1, N2))
        for a in range(N1):
            for b in range(N2):
                acc = 0.0
                for k in range(n):
                    d = (X1[a, k] - X2[b, k]) / lengthscales[k]
                    acc += d * d
                out[a, b] = acc
        return out

    @numba.njit(cache=True, fastmath=True)
    def _tilted_nb(y, ymin, beta):
        # single pass on d = y - ymin >= 0; standardized rows keep d small
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        inv = 1.0 / beta
        for j in range(y.shape[0]):
            d = y[j] - ymin
            e = math.exp(-d * inv)
            s0 += e
            s1 += e * d
            s2 += e * d * d
        md = s1 / s0
        return s0, ymin + md, max(s2 / s0 - md * md, 0.0)

    @numba.njit(cache=True)
    def _fit_row_nb(y, ybar, ymin):
        beta = _SQRT6_OVER_PI
        for _ in range(FIT_MAXITER):
            _, wm, wv = _tilted_nb(y, ymin, beta)
            target = ybar - wm
            new = beta + (target - beta) / (1.0 + wv / (beta * beta))
            if new <= 0.0:
                new = 0.5 * beta
            conv = abs(new - beta) < FIT_TOL * max(1.0, abs(beta))
            beta = new
            if conv:
                return beta, True
        lo = 1e-6
        hi = 10.0
        _, wm, _ = _tilted_nb(y, ymin, lo)
        rlo = lo - (ybar - wm)
        _, wm, _ = _tilted_nb(y, ymin, hi)
        rhi = hi - (ybar - wm)
        if not (rlo < 0.0 and rhi > 0.0):
            return np.nan, False
        for _ in range(FIT_MAXITER):
            mid = 0.5 * (lo + hi)
            _, wm, _ = _tilted_nb(y, ymin, mid)
            if mid - (ybar - wm) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < FIT_TOL * max(1.0, hi):
                return 0.5 * (lo + hi), True
        return 0.5 * (lo + hi), False

    @numba.njit(cache=True)
    def gumbel_fit_nb(samples):
        B, N = samples.shape
        alpha = np.empty(B)
        beta_out = np.empty(B)
        status = np.zeros(B, dtype=np.int64)
        y = np.empty(N)
        for b in range(B):
            mean = 0.0
            for j in range(N):
                mean += samples[b, j]
            mean /= N
            var = 0.0
            for j in range(N):
                var += (samples[b, j] - mean) ** 2
            sd = math.sqrt(var / N)
            if not (sd > 0.0) or not (sd > DEGENERATE_REL * abs(mean)) or not math.isfinite(sd):
                status[b] = FIT_DEGENERATE
                alpha[b] = np.nan
                beta_out[b] = np.nan
                continue
            ybar = 0.0
            ymin = np.inf
            for j in range(N):
                y[j] = (samples[b, j] - mean) / sd
                ybar += y[j]
                if y[j] < ymin:
                    ymin = y[j]
            ybar /= N
            beta, ok = _fit_row_nb(y, ybar, ymin)
            if not ok:
                status[b] = FIT_NOT_CONVERGED
                alpha[b] = np.nan
                beta_out[b] = np.nan
                continue
            acc = 0.0
            for j in range(N):
                acc += math.exp(-(y[j] - ymin) / beta)
            alpha[b] = mean + sd * (ymin - beta * math.log(acc / N))
            beta_out[b] = sd * beta
        return alpha, beta_out, status


def _as2d(a):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=np.float64)))


if USE_NUMBA:

    def max_gaussian(means, stds, z):
        return max_gaussian_nb(_as2d(means), _as2d(stds), _as2d(z))

    def ei_gumbel(alpha, beta, best, base):
        alpha = np.ascontiguousarray(alpha, dtype=np.float64)
        best = np.broadcast_to(np.asarray(best, dtype=np.float64), alpha.shape).copy()
        return ei_gumbel_nb(
            alpha,
            np.ascontiguousarray(beta, dtype=np.float64),
            best,
            np.ascontiguousarray(base, dtype=np.float64),
        )

    def scaled_sqdist(X1, X2, lengthscales):
        return scaled_sqdist_nb(
            _as2d(X1), _as2d(X2), np.ascontiguousarray(lengthscales, dtype=np.float64)
        )

    def gumbel_fit(samples):
        return gumbel_fit_nb(_as2d(samples))

else:
    max_gaussian = max_gaussian_np
    ei_gumbel = ei_gumbel_np
    scaled_sqdist = scaled_sqdist_np
    gumbel_fit = gumbel_fit_np


BACKEND = "numba" if USE_NUMBA else "numpy"
