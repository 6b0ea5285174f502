"""Command-line entry point: ``repeated-irl <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (
    ALGORITHMS,
    PROFILES,
    final_errors,
    profile_config,
    run_benchmark,
    run_omnipotent,
    run_single_env_sweep,
    write_dicts_csv,
)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", help="one or more regularization weights")
    p.add_argument("--budget", type=int)
    p.add_argument("--sims", type=int)
    p.add_argument("--mode", choices=("policy", "trajectory"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("out"))


def _config(args):
    overrides = {
        key: getattr(args, key)
        for key in ("grid_n", "gamma", "budget", "sims", "mode", "seed")
        if getattr(args, key, None) is not None
    }
    config = profile_config(args.profile, **overrides)
    lambdas = args.lam or [config.lam]
    return replace(config, lam=lambdas[0]), lambdas


def _print_finals(records, algorithms, lambdas) -> None:
    for alg in algorithms:
        for lam in lambdas:
            errs = final_errors(records, alg, lam)
            se = errs.std(ddof=1) / np.sqrt(errs.size) if errs.size > 1 else 0.0
            print(f"{alg:8s} lambda={lam:<6g} final error {errs.mean():.4f} (+/- {se:.4f}) over {errs.size} sims")


def _benchmark(args, algorithms) -> int:
    config, lambdas = _config(args)
    records, _ = run_benchmark(config, algorithms, args.out, lambdas)
    _print_finals(records, algorithms, lambdas)
    print(f"wrote {args.out}/rounds.csv, summary.csv, transcript.json")
    return 0


def cmd_greedy(args) -> int:
    return _benchmark(args, ["greedy"])


def cmd_baseline(args) -> int:
    return _benchmark(args, [args.kind])


def cmd_bench(args) -> int:
    return _benchmark(args, list(ALGORITHMS))


def cmd_sweep(args) -> int:
    config, lambdas = _config(args)
    if args.lam:
        config = replace(config, sweep_lambdas=tuple(lambdas))
    if args.envs is not None:
        config = replace(config, sweep_envs=args.envs)
    res = run_single_env_sweep(config)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    table = res["table"]
    rows = [
        {"env": i, "lambda": lam, "mean_error": float(table[i, j])}
        for i in range(table.shape[0])
        for j, lam in enumerate(res["lambdas"])
    ]
    write_dicts_csv(out / "rounds.csv", rows)
    best = {k: res[k] for k in ("best_env", "best_lambda", "best_mean_error")}
    write_dicts_csv(out / "summary.csv", [best])
    (out / "transcript.json").write_text(json.dumps({**best, "lambdas": list(res["lambdas"]), "sims": config.sims}))
    print(f"best single environment: env {best['best_env']} lambda={best['best_lambda']:g} mean error {best['best_mean_error']:.4f}")
    return 0


def cmd_omnipotent(args) -> int:
    rows = run_omnipotent(args.d, args.epsilon, args.sims, args.seed, args.r_max, args.gamma)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    flat = ("sim", "d", "epsilon", "experiments_used", "experiment_bound", "canonical_error", "s_min", "s_max")
    write_dicts_csv(out / "rounds.csv", [{k: r[k] for k in flat} for r in rows])
    errs = np.array([r["canonical_error"] for r in rows])
    used = np.array([r["experiments_used"] for r in rows])
    summary = {
        "d": args.d,
        "epsilon": args.epsilon,
        "sims": args.sims,
        "max_canonical_error": float(errs.max()),
        "max_experiments_used": int(used.max()),
        "experiment_bound": rows[0]["experiment_bound"],
    }
    write_dicts_csv(out / "summary.csv", [summary])
    (out / "transcript.json").write_text(json.dumps(rows))
    print(
        f"d={args.d} epsilon={args.epsilon:g}: max error {summary['max_canonical_error']:.5f}, "
        f"max experiments {summary['max_experiments_used']} (bound {summary['experiment_bound']})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repeated-irl", description="Active experiment design for inverse reinforcement learning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("omnipotent", help="identify random rewards with constructed environments")
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--sims", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_omnipotent)

    p = sub.add_parser("greedy", help="greedy maze selection")
    _add_run_flags(p)
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("baseline", help="mazes drawn at random from a fixed family")
    _add_run_flags(p)
    p.add_argument("--kind", choices=("uniform", "varied"), default="uniform")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="best single-maze selection over random mazes and lambdas")
    _add_run_flags(p)
    p.add_argument("--envs", type=int, help="number of random mazes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="greedy and both baselines")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
