"""Command-line entry points: trial, sweep, figures."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, SystemConfig, get_profile, load_config
from .harness import (AXES, ALGO_OVERRIDES, ResultTable, canonical_figures,
                      emit, run_trial, sweep)
from .scenario import ScenarioError
from .tsoamp import save_result


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=("desk", "full"), default="desk")
    p.add_argument("--config", help="JSON file with SystemConfig overrides")
    p.add_argument("--seed", type=int, default=0)


def _resolve_config(args) -> SystemConfig:
    cfg = get_profile(args.profile)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    return cfg


def _echo_config(cfg: SystemConfig, args, path: str) -> None:
    record = {"config": cfg.to_dict(), "config_hash": cfg.hash(),
              "seed": args.seed, "argv": sys.argv[1:]}
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jadce",
                                     description="Grant-free activity detection and channel "
                                                 "estimation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_trial = sub.add_parser("trial", help="run one Monte-Carlo trial")
    _add_common(p_trial)
    p_trial.add_argument("--algo", default="tsoamp", choices=sorted(ALGO_OVERRIDES))
    p_trial.add_argument("--out", help="output prefix for the result dump")

    p_sweep = sub.add_parser("sweep", help="sweep one axis")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 20,30,40")
    p_sweep.add_argument("--algo", default="tsoamp",
                         help="comma-separated algorithm ids")
    p_sweep.add_argument("--trials", type=int, default=50)
    p_sweep.add_argument("--workers", type=int, default=None,
                         help="process count (default: JADCE_WORKERS or 1)")
    p_sweep.add_argument("--out", required=True, help="CSV output path")

    p_fig = sub.add_parser("figures", help="run the canonical figure sweeps")
    _add_common(p_fig)
    p_fig.add_argument("--trials", type=int, default=200)
    p_fig.add_argument("--workers", type=int, default=None)
    p_fig.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "trial":
            metrics = run_trial(cfg, args.algo, args.seed)
            line = (f"algo={metrics.algorithm} seed={metrics.seed} "
                    f"aer={metrics.aer:.6g} "
                    f"nmse_db={'n/a' if metrics.nmse_db is None else format(metrics.nmse_db, '.4g')} "
                    f"runtime_s={metrics.runtime_s:.3f}")
            print(line)
            if args.out:
                from .harness import build_trial_frame, resolve_algorithm
                solver, overrides = resolve_algorithm(args.algo)
                cfg_a = cfg.replace(**overrides) if overrides else cfg
                frame, pilot, chan, activity = build_trial_frame(cfg_a, args.seed)
                res = solver(frame, pilot, cfg_a)
                save_result(res, args.out, config_hash=cfg_a.hash(), seed=args.seed)
                _echo_config(cfg_a, args, args.out + ".config.json")
            if not metrics.finite:
                print("error: non-finite values in the estimate", file=sys.stderr)
                return 1
        elif args.command == "sweep":
            values = [float(v) for v in args.values.split(",")]
            algos = [a.strip() for a in args.algo.split(",")]
            table = sweep(cfg, args.axis, values, algos, args.trials, args.seed,
                          workers=args.workers)
            emit(table, args.out)
            _echo_config(cfg, args, os.path.splitext(args.out)[0] + ".config.json")
            print(f"wrote {args.out} ({len(table.rows)} rows)")
        elif args.command == "figures":
            manifest = canonical_figures(cfg, args.out, args.trials, args.seed,
                                         workers=args.workers)
            _echo_config(cfg, args, os.path.join(args.out, "run.config.json"))
            print(f"wrote {len(set(manifest.values()))} sweep files under {args.out}")
    except (ConfigError, ScenarioError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
