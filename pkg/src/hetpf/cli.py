"""Command line interface: ``run``, ``sweep`` and ``converge``."""
import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from .harness import (LONG_RUN_CYCLES, BimodalPrior, ConfigError, StudySetup, default_config, emit_results,
                      parse_config, run_convergence_study, run_sweep, run_twin_experiment, summary_line,
                      sweep_configs, sweep_csv)

LONG_RUN_REPEATS = 100_000
LONG_RUN_SIZES = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _load(args):
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = default_config("lorenz63")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.paper_scale:
        changes["cycles"] = LONG_RUN_CYCLES[cfg.model]
    if args.cycles is not None:
        changes["cycles"] = args.cycles
    return replace(cfg, **changes) if changes else cfg


def _experiment_args(p):
    p.add_argument("--config", help="experiment config file (INI sections)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--cycles", type=int, help="number of scored assimilation cycles")
    p.add_argument("--paper-scale", action="store_true", help="long runs: 100000 cycles (L63) or 50000 (L96 models)")


def cmd_run(args):
    cfg = _load(args)
    result = run_twin_experiment(cfg)
    if args.out:
        emit_results(result, args.out)
    print(summary_line(cfg, result))
    return 1 if result.diverged else 0


def cmd_sweep(args):
    base = _load(args)
    configs = sweep_configs(base, args.param, _floats(args.values),
                            _ints(args.sizes) if args.sizes else None,
                            _ints(args.seeds) if args.seeds else None)
    results = run_sweep(configs, jobs=args.jobs)
    text = sweep_csv(configs, results)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for cfg, (rmse, *_rest) in zip(configs, results):
        mode = cfg.hybrid.mode
        val = getattr(mode, "theta", getattr(mode, "alpha", None))
        print(f"{args.param}={val} M={cfg.ensemble_size} seed={cfg.seed} rmse={rmse:.6f}", file=sys.stderr)
    return 0


def cmd_converge(args):
    sizes = LONG_RUN_SIZES if args.paper_scale and not args.sizes else _ints(args.sizes or "4,32,256")
    repeats = LONG_RUN_REPEATS if args.paper_scale and args.repeats is None else (args.repeats or 10_000)
    alphas = _floats(args.alphas)
    setup = StudySetup(BimodalPrior(), args.y, args.r)
    table = run_convergence_study(setup, sizes, alphas, repeats, np.random.default_rng(args.seed))
    best = {m: a for m, a, _ in table.optimum()}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("ensemble_size", "alpha", "rmse", "optimal"))
            for i, m in enumerate(table.sizes):
                for j, a in enumerate(table.alphas):
                    w.writerow((m, repr(float(a)), repr(float(table.rmse[i, j])), int(best[m] == a)))
    for m, a, e in table.optimum():
        print(f"M={m} optimal_alpha={a:g} rmse={e:.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="hetpf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single twin experiment")
    _experiment_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid over alpha/theta, ensemble size and seeds")
    _experiment_args(p)
    p.add_argument("--param", choices=("alpha", "theta"), default="alpha")
    p.add_argument("--values", default="0,0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--sizes", help="comma-separated ensemble sizes")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("converge", help="single-step convergence study")
    p.add_argument("--sizes", help="comma-separated ensemble sizes (default 4,32,256)")
    p.add_argument("--alphas", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--y", type=float, default=StudySetup.y_obs, help="observed value")
    p.add_argument("--r", type=float, default=StudySetup.r, help="observation error variance")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--paper-scale", action="store_true", help="100000 repeats, M = 2..1024")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"hetpf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
