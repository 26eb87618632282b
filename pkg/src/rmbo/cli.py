"""Command-line entry point: ``rmbo {run,sweep,report,refsol}``."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from rmbo import config as config_mod
from rmbo import experiment
from rmbo.driver import reference_solution
from rmbo.errors import InvalidArgument
from rmbo.problems import PROBLEMS, make_problem

log = logging.getLogger("rmbo")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _parser():
    p = argparse.ArgumentParser(prog="rmbo", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, method=True, seed=True):
        sp.add_argument("--config", required=True, metavar="PATH", help="YAML experiment config")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        if seed:
            sp.add_argument("--seed", type=int)
        if method:
            sp.add_argument("--method", choices=sorted(config_mod.CLI_METHODS))

    sp = sub.add_parser("run", help="one optimization run")
    common(sp)

    sp = sub.add_parser("sweep", help="mono and multi runs over the reference-point grid")
    common(sp)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--seeds", type=int, help="replicate runs per reference point")

    sp = sub.add_parser("report", help="aggregate a sweep directory")
    sp.add_argument("sweep_dir", nargs="?")
    sp.add_argument("--out", metavar="DIR", help="sweep directory (alternative to positional)")

    sp = sub.add_parser("refsol", help="print the Ref Solution for the configured preference")
    common(sp, method=False, seed=False)
    return p


def _load(args):
    cfg = config_mod.load(args.config)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        updates["method"] = args.method
    if getattr(args, "jobs", None) is not None:
        updates["jobs"] = args.jobs
    if getattr(args, "seeds", None) is not None:
        updates["seeds"] = args.seeds
    if getattr(args, "out", None) is not None:
        updates["out"] = args.out
    return replace(cfg, **updates) if updates else cfg


def cmd_run(args):
    try:
        cfg = _load(args)
        run_cfg = experiment.build_run_config(cfg)
    except (InvalidArgument, ValueError) as exc:
        print(f"rmbo run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(cfg.out) / (cfg.label or "run")
    ok = experiment.execute(run_cfg, out)
    print(f"{'completed' if ok else 'FAILED'}: {out}")
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_sweep(args):
    try:
        cfg = _load(args)
        experiment.sweep_plan(cfg, cfg.out)  # validates every instance config
    except (InvalidArgument, ValueError) as exc:
        print(f"rmbo sweep: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ok, failed, skipped = experiment.sweep(cfg, cfg.out, jobs=cfg.jobs)
    print(f"sweep {cfg.out}: {ok} completed, {failed} failed, {skipped} already complete")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def cmd_report(args):
    target = args.sweep_dir or args.out
    if not target:
        print("rmbo report: give a sweep directory", file=sys.stderr)
        return EXIT_USAGE
    n = experiment.report(target)
    if n == 0:
        print(f"rmbo report: no completed runs under {target}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"report written for {n} runs in {target}")
    return EXIT_OK


def cmd_refsol(args):
    try:
        cfg = config_mod.load(args.config)
    except InvalidArgument as exc:
        print(f"rmbo refsol: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if str(cfg.problem).upper() not in PROBLEMS:
        print(
            f"rmbo refsol: problem {cfg.problem!r} has no front sampler (supported: {', '.join(PROBLEMS)})",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    try:
        problem = make_problem(cfg.problem, cfg.n_var, cfg.n_obj)
        pref = experiment.build_preference(cfg, problem)
    except (InvalidArgument, ValueError) as exc:
        print(f"rmbo refsol: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ref = reference_solution(problem, pref)
    f = ", ".join(experiment.fmt(float(v)) for v in ref.objective_vector)
    print(f"f* = ({f})")
    print(f"g* = {experiment.fmt(ref.asf_value)}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "report": cmd_report, "refsol": cmd_refsol}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
