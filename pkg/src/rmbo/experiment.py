"""Runs, sweeps and reports on disk.

File layout::

    <run dir>/trace.csv    per-evaluation record, deterministic given the seed
    <run dir>/timing.csv   cumulative wall clock per evaluation (measured, not reproducible)
    <run dir>/meta.json    seed, bounds, method, every default, run status

    <sweep dir>/instance_XX/<method>/...   one run directory per instance and method
    <sweep dir>/summary.csv                median and 16/84th percentiles per evaluation
    <sweep dir>/final_points.csv           nondominated BO-phase solutions per instance
    <sweep dir>/instances.csv              reference point and Ref Solution per instance
"""

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from rmbo import driver
from rmbo.config import method_key
from rmbo.metrics import nondominated_mask
from rmbo.problems import make_problem, refpoint_grid
from rmbo.scalarization import PreferenceSpec

log = logging.getLogger(__name__)

FLOAT_FMT = "{:.9g}"
STATUS_COMPLETE = "complete"
STATUS_FAILED = "failed"


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def trace_header(n, m):
    return (
        ["eval_index"]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"f_{i + 1}" for i in range(m)]
        + ["asf_value", "min_asf_so_far", "asf_distance", "min_asf_distance_so_far", "phase"]
    )


def trace_rows(trace):
    dist = trace.asf_distance
    mind = trace.min_asf_distance_so_far
    mins = trace.min_asf_so_far
    for k in range(len(trace)):
        yield (
            [k + 1]
            + list(trace.X[k])
            + list(trace.F[k])
            + [trace.asf[k], mins[k], dist[k], mind[k], trace.phase[k]]
        )


def write_run(trace, out_dir, status=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, m = trace.X.shape[1], trace.F.shape[1]
    _atomic_write(out / "trace.csv", _csv_text(trace_header(n, m), trace_rows(trace)))
    timing = ([k + 1, trace.wall_clock[k], trace.phase[k]] for k in range(len(trace)))
    _atomic_write(out / "timing.csv", _csv_text(["eval_index", "wall_clock_s", "phase"], timing))
    meta = dict(trace.meta)
    meta["status"] = status or (STATUS_FAILED if trace.failed else STATUS_COMPLETE)
    meta["evaluations"] = len(trace)
    if trace.message:
        meta["message"] = trace.message
    _atomic_write(out / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def is_complete(run_dir):
    p = Path(run_dir) / "meta.json"
    if not p.exists() or not (Path(run_dir) / "trace.csv").exists():
        return False
    try:
        return json.loads(p.read_text(encoding="utf-8")).get("status") == STATUS_COMPLETE
    except (OSError, json.JSONDecodeError):
        return False


def build_preference(cfg, problem, reference_point=None):
    z = reference_point if reference_point is not None else cfg.reference_point
    if z is None:
        raise ValueError("a reference_point is required")
    ideal = cfg.ideal if cfg.ideal is not None else problem.ideal
    nadir = cfg.nadir if cfg.nadir is not None else problem.nadir
    return PreferenceSpec(z, ideal, nadir, cfg.rho)


def build_run_config(cfg, method=None, reference_point=None, seed=None, design_seed=None):
    problem = make_problem(cfg.problem, cfg.n_var, cfg.n_obj)
    return driver.RunConfig(
        problem=problem,
        preference=build_preference(cfg, problem, reference_point),
        method=method_key(method or cfg.method),
        initial_size=cfg.initial_size,
        budget=cfg.budget,
        seed=cfg.seed if seed is None else seed,
        design_seed=design_seed,
        ga=cfg.ga_config,
        n_mc=cfg.n_mc,
        n_gumbel_fit=cfg.n_gumbel_fit,
        gp_restarts=cfg.gp_restarts,
        bounds_mode=cfg.bounds_mode,
    )


def execute(run_cfg, out_dir):
    """Run one optimization, flushing the trace after every evaluation.

    Returns True on success.  A completed run directory is left untouched.
    """
    out = Path(out_dir)
    if is_complete(out):
        log.info("%s already complete; skipping", out)
        return True

    def flush(trace):
        write_run(trace, out, status="running")

    trace = driver.run(run_cfg, on_evaluation=flush)
    write_run(trace, out)
    return not trace.failed


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

_METHOD_CODE = {"mono": 0, "multi_gumbel": 1, "multi_laplace": 2}


def derive_seed(master, *parts):
    """Deterministic 63-bit seed from a master seed and integer parts."""
    ss = np.random.SeedSequence([int(master), *[int(p) for p in parts]])
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def sweep_plan(cfg, out_dir):
    """List of ``(run dir, RunConfig)`` covering grid points x replicates x methods."""
    problem = make_problem(cfg.problem, cfg.n_var, cfg.n_obj)
    lower = cfg.grid_lower if cfg.grid_lower is not None else problem.ideal
    upper = cfg.grid_upper if cfg.grid_upper is not None else problem.front_extremes
    grid = refpoint_grid(problem.n_obj, cfg.grid_count, lower, upper)
    multi = method_key(cfg.method)
    methods = ["mono", multi if multi != "mono" else "multi_gumbel"]
    plan = []
    for i, z in enumerate(grid):
        for rep in range(cfg.seeds):
            name = f"instance_{i:02d}" if cfg.seeds == 1 else f"instance_{i:02d}_s{rep}"
            # both methods start from the same initial design
            design_seed = derive_seed(cfg.seed, i, rep)
            for method in methods:
                seed = derive_seed(cfg.seed, i, rep, _METHOD_CODE[method])
                rc = build_run_config(cfg, method, z, seed, design_seed)
                plan.append((Path(out_dir) / name / method, rc))
    return plan


def _execute_job(job):
    path, rc = job
    try:
        return str(path), execute(rc, path)
    except Exception as exc:  # a failing instance must not abort the sweep
        log.exception("instance %s failed: %s", path, exc)
        return str(path), False


def sweep(cfg, out_dir, jobs=1):
    """Run every pending instance; returns ``(n_ok, n_failed, n_skipped)``."""
    plan = sweep_plan(cfg, out_dir)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    cfg.dump(Path(out_dir) / "sweep_config.yaml")
    pending = [job for job in plan if not is_complete(job[0])]
    skipped = len(plan) - len(pending)
    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_job, pending))
    else:
        results = [_execute_job(job) for job in pending]
    ok = sum(1 for _, good in results if good)
    return ok, len(results) - ok, skipped


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _load_run(run_dir):
    rows = read_csv(Path(run_dir) / "trace.csv")
    meta = json.loads((Path(run_dir) / "meta.json").read_text(encoding="utf-8"))
    return rows, meta


def completed_runs(sweep_dir):
    """``(instance, method, run dir)`` for every completed run, sorted."""
    out = []
    for meta_path in sorted(Path(sweep_dir).glob("*/*/meta.json")):
        run_dir = meta_path.parent
        if is_complete(run_dir):
            out.append((run_dir.parent.name, run_dir.name, run_dir))
    return out


def report(sweep_dir):
    """Write summary.csv, final_points.csv and instances.csv; returns the run count."""
    runs = completed_runs(sweep_dir)
    if not runs:
        return 0
    by_method = {}
    final_rows, inst_rows = [], {}
    m = None
    for instance, method, run_dir in runs:
        rows, meta = _load_run(run_dir)
        m = meta["n_obj"]
        curve = np.array([float(r["min_asf_distance_so_far"]) for r in rows])
        by_method.setdefault(method, []).append(curve)

        bo = [r for r in rows if r["phase"] == "bo"]
        if bo:
            F = np.array([[float(r[f"f_{i + 1}"]) for i in range(m)] for r in bo])
            for r, keep in zip(bo, nondominated_mask(F)):
                if keep:
                    final_rows.append(
                        [instance, method, r["eval_index"]]
                        + [r[f"f_{i + 1}"] for i in range(m)]
                        + [r["asf_value"]]
                    )
        ref = meta.get("ref_solution") or {}
        inst_rows[instance] = (
            [instance]
            + [fmt(float(v)) for v in meta["reference_point"]]
            + [fmt(float(v)) for v in ref.get("objective_vector", [np.nan] * m)]
            + [fmt(float(ref.get("asf_value", np.nan)))]
        )

    summary = []
    for method in sorted(by_method):
        curves = by_method[method]
        length = min(len(c) for c in curves)
        C = np.vstack([c[:length] for c in curves])
        med = np.median(C, axis=0)
        p16 = np.percentile(C, 16, axis=0)
        p84 = np.percentile(C, 84, axis=0)
        for k in range(length):
            summary.append([method, k + 1, med[k], p16[k], p84[k], C.shape[0]])

    d = Path(sweep_dir)
    _atomic_write(
        d / "summary.csv",
        _csv_text(["method", "eval_index", "median", "p16", "p84", "n_instances"], summary),
    )
    _atomic_write(
        d / "final_points.csv",
        _csv_text(
            ["instance", "method", "eval_index"] + [f"f_{i + 1}" for i in range(m)] + ["asf_value"],
            final_rows,
        ),
    )
    _atomic_write(
        d / "instances.csv",
        _csv_text(
            ["instance"]
            + [f"z_{i + 1}" for i in range(m)]
            + [f"ref_f_{i + 1}" for i in range(m)]
            + ["ref_asf_value"],
            [inst_rows[k] for k in sorted(inst_rows)],
        ),
    )
    return len(runs)
