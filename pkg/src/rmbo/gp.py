"""Gaussian-process regression with an RBF-ARD kernel.

Hyperparameters are optimized in log space by L-BFGS-B from several random
starting points, using the analytic gradient of the log marginal likelihood.
Targets are standardized before training and restored on prediction, so the
zero-mean prior holds in standardized space.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack

from rmbo import _kernels
from rmbo.errors import InvalidArgument, NumericFailure, TrainingFailure

LOG_SIGNAL_BOUNDS = (-5.0, 5.0)
LOG_LENGTHSCALE_BOUNDS = (-5.0, 5.0)
LOG_NOISE_BOUNDS = (-8.0, 1.0)
NOISE_FLOOR = 1e-6
JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Hyperparameters:
    signal_std: float
    lengthscales: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if not self.signal_std > 0:
            raise InvalidArgument(f"signal_std must be positive, got {self.signal_std}")
        if ls.ndim != 1 or ls.size == 0 or not np.all(ls > 0):
            raise InvalidArgument("lengthscales must be a nonempty vector of positive reals")
        if not self.noise_std >= 0:
            raise InvalidArgument(f"noise_std must be nonnegative, got {self.noise_std}")

    @property
    def dim(self):
        return self.lengthscales.size

    def to_log(self):
        """Pack as ``[log sf, log l_1..l_n, log sn]``."""
        return np.concatenate(
            [[np.log(self.signal_std)], np.log(self.lengthscales), [np.log(max(self.noise_std, 1e-300))]]
        )

    @classmethod
    def from_log(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(float(np.exp(theta[0])), np.exp(theta[1:-1]), float(np.exp(theta[-1])))


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: float
    std: float


@dataclass(frozen=True, eq=False)
class TrainedGP:
    """Conditioned GP; immutable, so concurrent readers are safe.

    ``cholesky`` and ``alpha`` refer to the standardized targets; ``y_mean``
    and ``y_std`` restore the original units in :func:`predict`.
    """

    inputs: np.ndarray
    targets: np.ndarray
    hyperparameters: Hyperparameters
    cholesky: np.ndarray
    alpha: np.ndarray
    log_marginal: float
    y_mean: float = 0.0
    y_std: float = 1.0
    jitter: float = 0.0
    restarts_log: tuple = field(default=(), repr=False)

    @property
    def dim(self):
        return self.inputs.shape[1]

    def predict(self, Xstar):
        return predict_batch(self, Xstar)


def _check_dims(x, n):
    if x.shape[-1] != n:
        raise InvalidArgument(f"input has dimension {x.shape[-1]}, expected {n}")


def kernel_eval(x, x_prime, theta, same_point=False):
    """Covariance between two points.

    The noise term is added only when ``same_point`` marks the same data
    index, not merely equal coordinates.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != x_prime.shape or x.size != theta.dim:
        raise InvalidArgument(
            f"dimension mismatch: {x.size}, {x_prime.size}, hyperparameters {theta.dim}"
        )
    r2 = np.sum(((x - x_prime) / theta.lengthscales) ** 2)
    k = theta.signal_std**2 * np.exp(-0.5 * r2)
    if same_point:
        k += theta.noise_std**2
    return float(k)


def _per_dim_sqdist(X):
    d = X[:, None, :] - X[None, :, :]
    return d * d


def _gram(X, theta, per_dim=None):
    """Noise-free RBF Gram matrix and per-dimension squared distances."""
    if per_dim is None:
        per_dim = _per_dim_sqdist(X)
    r2 = per_dim @ (1.0 / theta.lengthscales**2)
    R = np.exp(-0.5 * r2)
    return theta.signal_std**2 * R, R, per_dim


def _cholesky_with_jitter(K, jitter=JITTER_START):
    """Cholesky of ``K + eps I`` with ``eps`` escalated x10 on failure.

    Returns ``(L, eps)``.  ``jitter`` is relative to ``trace(K)/N``.
    """
    N = K.shape[0]
    scale = np.trace(K) / N
    rel = jitter
    last = None
    while rel <= JITTER_MAX * (1 + 1e-12):
        eps = rel * scale
        try:
            L = linalg.cholesky(K + eps * np.eye(N), lower=True, check_finite=True)
            return L, eps
        except (linalg.LinAlgError, ValueError) as exc:
            last = exc
            rel *= 10.0
    raise NumericFailure(f"Cholesky failed at jitter {JITTER_MAX:g}*trace/N: {last}")


def log_marginal_likelihood(X, f, theta, jitter=JITTER_START, _per_dim=None):
    """Log marginal likelihood and its gradient w.r.t. log-hyperparameters.

    Value is ``-1/2 f^T K^{-1} f - 1/2 log|2 pi K|``.  The gradient is ordered
    like :meth:`Hyperparameters.to_log`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    N = X.shape[0]
    if N < 1 or f.size != N:
        raise InvalidArgument("X and f must be nonempty with matching lengths")
    _check_dims(X, theta.dim)

    Kf, R, per_dim = _gram(X, theta, _per_dim)
    K = Kf + theta.noise_std**2 * np.eye(N)
    L, _ = _cholesky_with_jitter(K, jitter)
    alpha = linalg.cho_solve((L, True), f)
    value = -0.5 * f @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * N * np.log(2 * np.pi)

    Kinv, info = lapack.dpotri(L, lower=1)
    if info != 0:
        raise NumericFailure(f"dpotri failed with info={info}")
    Kinv = np.tril(Kinv) + np.tril(Kinv, -1).T
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty(theta.dim + 2)
    grad[0] = 0.5 * np.sum(W * (2.0 * Kf))
    # dK/dlog l_j = Kf * D_j / l_j^2
    WK = W * Kf
    grad[1:-1] = 0.5 * (WK.ravel() @ per_dim.reshape(N * N, -1)) / theta.lengthscales**2
    grad[-1] = 0.5 * np.trace(W) * 2.0 * theta.noise_std**2
    return float(value), grad


def _standardize(f):
    mean = float(np.mean(f))
    std = float(np.std(f))
    if not std > 0 or not np.isfinite(std):
        std = 1.0
    return (f - mean) / std, mean, std


def _refined_solve(K, L, y, steps=10):
    """Solve ``K alpha = y`` using the jittered factor ``L`` as a preconditioner.

    A few refinement steps remove the O(jitter) bias from the posterior mean.
    A step is kept only if it shrinks the residual.
    """
    alpha = linalg.cho_solve((L, True), y)
    res = y - K @ alpha
    rnorm = np.linalg.norm(res)
    for _ in range(steps):
        cand = alpha + linalg.cho_solve((L, True), res)
        cres = y - K @ cand
        cnorm = np.linalg.norm(cres)
        if not cnorm < rnorm:
            break
        alpha, res, rnorm = cand, cres, cnorm
    return alpha


def build(X, f, theta, standardize=True, jitter=JITTER_START):
    """Condition a GP on data with fixed hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    _check_dims(X, theta.dim)
    if f.size != X.shape[0]:
        raise InvalidArgument("X and f lengths differ")
    if standardize:
        y, mean, std = _standardize(f)
    else:
        y, mean, std = f, 0.0, 1.0
    Kf, _, _ = _gram(X, theta)
    K = Kf + theta.noise_std**2 * np.eye(X.shape[0])
    L, eps = _cholesky_with_jitter(K, jitter)
    alpha0 = linalg.cho_solve((L, True), y)
    alpha = _refined_solve(K, L, y)
    # likelihood stays on the jittered system, matching train()
    lml = -0.5 * y @ alpha0 - np.sum(np.log(np.diag(L))) - 0.5 * y.size * np.log(2 * np.pi)
    return TrainedGP(
        inputs=X.copy(),
        targets=f.copy(),
        hyperparameters=theta,
        cholesky=L,
        alpha=alpha,
        log_marginal=float(lml),
        y_mean=mean,
        y_std=std,
        jitter=eps,
    )


def default_log_bounds(n, log_noise_bounds=LOG_NOISE_BOUNDS):
    lo_noise = max(log_noise_bounds[0], np.log(NOISE_FLOOR))
    return [LOG_SIGNAL_BOUNDS] + [LOG_LENGTHSCALE_BOUNDS] * n + [(lo_noise, log_noise_bounds[1])]


def train(X, f, restarts=10, rng=None, log_noise_bounds=LOG_NOISE_BOUNDS, maxiter=200):
    """Fit hyperparameters by maximizing the log marginal likelihood.

    Starting points are drawn uniformly inside the log-space box from
    ``rng``; the best restart wins, ties going to the lower restart index.

    Raises
    ------
    TrainingFailure
        If every restart fails numerically.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    N, n = X.shape
    if N < 2:
        raise InvalidArgument("training needs at least two points")
    if restarts < 1:
        raise InvalidArgument("restarts must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    y, _, _ = _standardize(f)
    per_dim = _per_dim_sqdist(X)
    bounds = default_log_bounds(n, log_noise_bounds)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def objective(t):
        try:
            v, g = log_marginal_likelihood(X, y, Hyperparameters.from_log(t), _per_dim=per_dim)
        except (NumericFailure, InvalidArgument):
            return 1e25, np.zeros_like(t)
        if not np.isfinite(v):
            return 1e25, np.zeros_like(t)
        return -v, -g

    starts = lo + (hi - lo) * rng.random((restarts, lo.size))
    best_t, best_v, last_msg = None, -np.inf, "no restart attempted"
    log = []
    for k, t0 in enumerate(starts):
        try:
            res = optimize.minimize(
                objective,
                t0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": maxiter},
            )
        except (ValueError, FloatingPointError) as exc:
            last_msg = f"restart {k}: {exc}"
            log.append((k, np.nan))
            continue
        v = -float(res.fun)
        log.append((k, v))
        if not np.isfinite(v) or v <= -1e24:
            last_msg = f"restart {k}: {res.message}"
            continue
        if v > best_v:
            best_v, best_t = v, np.clip(res.x, lo, hi)
    if best_t is None:
        raise TrainingFailure(f"all {restarts} restarts failed; last: {last_msg}")
    model = build(X, f, Hyperparameters.from_log(best_t))
    return replace(model, restarts_log=tuple(log))


def predict_batch(model, Xstar):
    """Posterior mean and standard deviation of the latent function at rows of ``Xstar``."""
    Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
    _check_dims(Xstar, model.dim)
    th = model.hyperparameters
    r2 = _kernels.scaled_sqdist(Xstar, model.inputs, th.lengthscales)
    Ks = th.signal_std**2 * np.exp(-0.5 * r2)
    mu = Ks @ model.alpha
    v = linalg.solve_triangular(model.cholesky, Ks.T, lower=True, check_finite=False)
    var = th.signal_std**2 - np.sum(v * v, axis=0)
    std = np.sqrt(np.maximum(var, 0.0))
    return model.y_mean + model.y_std * mu, model.y_std * std


def predict(model, xstar):
    """Posterior prediction at a single point."""
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    if xstar.ndim != 1:
        raise InvalidArgument("predict expects a single n-vector; use predict_batch for many")
    mu, sd = predict_batch(model, xstar[None, :])
    return PosteriorPrediction(float(mu[0]), float(sd[0]))
