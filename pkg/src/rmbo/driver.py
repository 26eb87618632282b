"""Mono- and multi-surrogate Bayesian optimization loops.

Every random stream is derived from ``(seed, stream tag, iteration)`` so the
first k evaluations of a run do not depend on its total budget.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from rmbo import _kernels, gp
from rmbo.acquisition import ei_closed_form, ei_monte_carlo_batch, gumbel_base_draws
from rmbo.asf_distribution import (
    fit_gumbel_batch,
    laplace_fit_batch,
    max_sample_crn,
    shifted_params,
)
from rmbo.errors import InvalidArgument, NumericFailure, TrainingFailure
from rmbo.ga import GAConfig, maximize
from rmbo.metrics import RefSolution, ref_solution
from rmbo.problems import ProblemSpec, lhs_design
from rmbo.scalarization import PreferenceSpec, asf_value

log = logging.getLogger(__name__)

METHODS = ("mono", "multi_gumbel", "multi_laplace")

_STREAM_LHS = 0
_STREAM_GP = 1
_STREAM_GA = 2
_STREAM_CRN = 3


def _rng(seed, stream, iteration=0):
    return np.random.default_rng([int(seed), stream, int(iteration)])


@dataclass(frozen=True)
class RunConfig:
    problem: object
    preference: PreferenceSpec
    method: str = "multi_gumbel"
    initial_size: Optional[int] = None
    budget: Optional[int] = None
    seed: int = 0
    design_seed: Optional[int] = None  # seeds the initial design; defaults to seed
    ga: GAConfig = field(default_factory=GAConfig)
    n_mc: int = 1000
    n_gumbel_fit: int = 1000
    gp_restarts: int = 10
    bounds_mode: str = "analytic"

    def __post_init__(self):
        n = self.problem.n_var
        if self.initial_size is None:
            object.__setattr__(self, "initial_size", 10 * n)
        if self.budget is None:
            object.__setattr__(self, "budget", 30 * n)
        if self.method not in METHODS:
            raise InvalidArgument(f"method must be one of {METHODS}, got {self.method!r}")
        if self.initial_size < 1 or self.budget <= self.initial_size:
            raise InvalidArgument("budget must exceed initial_size")
        if self.method != "mono" and self.preference.rho != 0:
            raise InvalidArgument("multi-surrogate methods require rho = 0")
        if self.preference.n_obj != self.problem.n_obj:
            raise InvalidArgument("preference and problem disagree on the number of objectives")
        if self.bounds_mode not in ("analytic", "running"):
            raise InvalidArgument("bounds_mode must be 'analytic' or 'running'")
        if self.n_mc < 1 or self.n_gumbel_fit < 10 or self.gp_restarts < 1:
            raise InvalidArgument("n_mc >= 1, n_gumbel_fit >= 10 and gp_restarts >= 1 required")


@dataclass
class Dataset:
    """Append-only record of evaluated points."""

    X: list = field(default_factory=list)
    F: list = field(default_factory=list)

    @property
    def evaluation_count(self):
        return len(self.X)

    def append(self, x, f):
        self.X.append(np.array(x, dtype=float, copy=True))
        self.F.append(np.array(f, dtype=float, copy=True))

    def arrays(self):
        return np.array(self.X), np.array(self.F)


@dataclass
class RunTrace:
    X: np.ndarray
    F: np.ndarray
    asf: np.ndarray
    phase: list
    wall_clock: np.ndarray
    ref: Optional[RefSolution] = None
    failed: bool = False
    message: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.phase)

    @property
    def min_asf_so_far(self):
        return np.minimum.accumulate(self.asf)

    @property
    def asf_distance(self):
        if self.ref is None:
            return np.full(len(self), np.nan)
        return np.abs(self.asf - self.ref.asf_value)

    @property
    def min_asf_distance_so_far(self):
        return np.minimum.accumulate(self.asf_distance)


def running_bounds(dataset):
    """Componentwise min/max of observed objectives; zero ranges widened by 1e-6."""
    F = np.atleast_2d(np.asarray(dataset.F if isinstance(dataset, Dataset) else dataset, dtype=float))
    if F.size == 0:
        raise InvalidArgument("dataset is empty")
    ideal = F.min(axis=0)
    nadir = F.max(axis=0)
    nadir = np.where(nadir > ideal, nadir, ideal + 1e-6)
    return ideal, nadir


@lru_cache(maxsize=16)
def _front(problem):
    return problem.sample_front(10_001 if problem.n_obj == 2 else 10_000)


def reference_solution(problem, pref):
    if not getattr(problem, "has_front", False):
        return None
    front = _front(problem) if isinstance(problem, ProblemSpec) else problem.sample_front()
    return ref_solution(front, pref)


# ---------------------------------------------------------------------------
# acquisition builders
# ---------------------------------------------------------------------------


def mono_acquisition(model, best):
    """Closed-form EI on a GP fitted to scalarized values."""

    def acq(Xc):
        mu, sd = gp.predict_batch(model, Xc)
        return ei_closed_form(mu, sd, best)

    return acq


@dataclass(frozen=True)
class CommonDraws:
    """Random numbers shared by every candidate within one GA run."""

    normals: np.ndarray  # (n_gumbel_fit, m) draws for the max-of-Gaussians sampler
    gumbel_base: np.ndarray  # (n_mc,) standard Gumbel variates

    @classmethod
    def draw(cls, m, n_fit, n_mc, rng):
        return cls(rng.standard_normal((n_fit, m)), gumbel_base_draws(n_mc, rng))


def multi_acquisition(models, pref, best, method, draws=None, stats=None):
    """EI of the ASF built from independent per-objective GPs.

    ``multi_gumbel`` samples the max-of-Gaussians, fits a Gumbel and
    integrates by Monte Carlo; ``multi_laplace`` uses the closed form under
    the Laplace approximation.  Candidates whose fit fails score 0.
    """
    if method == "multi_gumbel" and draws is None:
        raise InvalidArgument("multi_gumbel needs common random draws")

    def acq(Xc):
        preds = [gp.predict_batch(mdl, Xc) for mdl in models]
        mu = np.column_stack([p[0] for p in preds])
        sd = np.column_stack([p[1] for p in preds])
        means, stds = shifted_params(mu, sd, pref)
        if method == "multi_gumbel":
            samples = max_sample_crn(means, stds, draws.normals)
            loc, scale, ok = fit_gumbel_batch(samples)
            ei = np.zeros(loc.size)
            if ok.any():
                ei[ok] = ei_monte_carlo_batch(loc[ok], scale[ok], best, draws.gumbel_base)
        else:
            g0, A, ok = laplace_fit_batch(means, stds)
            ei = np.zeros(g0.size)
            if ok.any():
                ei[ok] = ei_closed_form(g0[ok], A[ok] ** -0.5, best)
        n_bad = int(np.count_nonzero(~ok))
        if n_bad:
            log.debug("%d candidate fits failed; acquisition set to 0", n_bad)
            if stats is not None:
                stats["fit_failures"] = stats.get("fit_failures", 0) + n_bad
        return ei

    return acq


# ---------------------------------------------------------------------------
# loop
# ---------------------------------------------------------------------------


def _unit(X, lower, upper):
    return (X - lower) / (upper - lower)


def _iteration_preference(cfg, F):
    if cfg.bounds_mode == "analytic":
        return cfg.preference
    ideal, nadir = running_bounds(F)
    return replace(cfg.preference, ideal=ideal, nadir=nadir)


def propose(X, F, cfg, iteration, stats=None):
    """Next decision vector for the configured method given data (X, F)."""
    lower = np.asarray(cfg.problem.lower, dtype=float)
    upper = np.asarray(cfg.problem.upper, dtype=float)
    Xu = _unit(X, lower, upper)
    pref = _iteration_preference(cfg, F)
    scal = asf_value(F, pref)
    best = float(np.min(scal))
    gp_rng = _rng(cfg.seed, _STREAM_GP, iteration)

    if cfg.method == "mono":
        model = gp.train(Xu, scal, restarts=cfg.gp_restarts, rng=gp_rng)
        acq = mono_acquisition(model, best)
    else:
        models = [
            gp.train(Xu, F[:, i], restarts=cfg.gp_restarts, rng=gp_rng)
            for i in range(F.shape[1])
        ]
        draws = None
        if cfg.method == "multi_gumbel":
            draws = CommonDraws.draw(
                F.shape[1], cfg.n_gumbel_fit, cfg.n_mc, _rng(cfg.seed, _STREAM_CRN, iteration)
            )
        acq = multi_acquisition(models, pref, best, cfg.method, draws, stats)

    ga_seed = int(_rng(cfg.seed, _STREAM_GA, iteration).integers(2**63 - 1))
    bounds = np.column_stack([np.zeros(lower.size), np.ones(lower.size)])
    xu, _ = maximize(acq, bounds, replace(cfg.ga, seed=ga_seed), batch=True)
    return lower + xu * (upper - lower)


def _metadata(cfg, ref):
    pref = cfg.preference
    return {
        "method": cfg.method,
        "seed": cfg.seed,
        "design_seed": cfg.seed if cfg.design_seed is None else cfg.design_seed,
        "problem": getattr(cfg.problem, "name", "custom"),
        "n_var": cfg.problem.n_var,
        "n_obj": cfg.problem.n_obj,
        "initial_size": cfg.initial_size,
        "budget": cfg.budget,
        "reference_point": pref.reference_point.tolist(),
        "ideal": pref.ideal.tolist(),
        "nadir": pref.nadir.tolist(),
        "weights": pref.weights.tolist(),
        "rho": pref.rho,
        "bounds_mode": cfg.bounds_mode,
        "gp_restarts": cfg.gp_restarts,
        "gp_noise": "learned, floored",
        "n_mc": cfg.n_mc,
        "n_gumbel_fit": cfg.n_gumbel_fit,
        "ga": {k: getattr(cfg.ga, k) for k in cfg.ga.__dataclass_fields__ if k != "seed"},
        "ref_solution": None if ref is None else {
            "objective_vector": ref.objective_vector.tolist(),
            "asf_value": ref.asf_value,
        },
        "kernel_backend": _kernels.BACKEND,
    }


def run(cfg, on_evaluation=None):
    """Run one optimization to ``cfg.budget`` evaluations.

    ``on_evaluation(trace_so_far)`` is called after every evaluation, which
    lets callers flush partial results.
    """
    problem = cfg.problem
    ref = reference_solution(problem, cfg.preference)
    data = Dataset()
    phases, clock = [], []
    stats = {"fit_failures": 0}
    t0 = time.perf_counter()

    design_seed = cfg.seed if cfg.design_seed is None else cfg.design_seed
    X0 = lhs_design(problem.n_var, cfg.initial_size, _rng(design_seed, _STREAM_LHS))
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    X0 = lower + X0 * (upper - lower)
    for x in X0:
        data.append(x, problem.evaluate(x))
        phases.append("init")
        clock.append(time.perf_counter() - t0)

    def snapshot(failed=False, message=""):
        X, F = data.arrays()
        meta = _metadata(cfg, ref)
        meta["fit_failures"] = stats["fit_failures"]
        return RunTrace(
            X=X,
            F=F,
            asf=np.asarray(asf_value(F, cfg.preference), dtype=float),
            phase=list(phases),
            wall_clock=np.array(clock),
            ref=ref,
            failed=failed,
            message=message,
            meta=meta,
        )

    if on_evaluation is not None:
        on_evaluation(snapshot())

    iteration = 0
    while data.evaluation_count < cfg.budget:
        X, F = data.arrays()
        try:
            x = propose(X, F, cfg, iteration, stats)
        except (TrainingFailure, NumericFailure) as exc:
            log.error("run aborted at evaluation %d: %s", data.evaluation_count + 1, exc)
            return snapshot(failed=True, message=str(exc))
        data.append(x, problem.evaluate(x))
        phases.append("bo")
        clock.append(time.perf_counter() - t0)
        iteration += 1
        if on_evaluation is not None:
            on_evaluation(snapshot())
    return snapshot()


def run_mono(cfg):
    if cfg.method != "mono":
        raise InvalidArgument("run_mono needs method='mono'")
    return run(cfg)


def run_multi(cfg):
    if cfg.method not in ("multi_gumbel", "multi_laplace"):
        raise InvalidArgument("run_multi needs a multi-surrogate method")
    return run(cfg)
