"""Command-line entry point.

Subcommands mirror the experiment runners; every run writes config.json, the
CSV outputs and summary.json into the output directory. Exit status is 0 on
success and 1 when a run-level check failed (the failures are printed).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config, validate
from .experiments import (
    RunArtifact,
    compare_linear_pricing,
    run_best_response_sweep,
    run_case_study,
    run_drl_train,
    run_fed_train,
    run_game_solve,
)


def _base_config(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = replace(cfg, mode=mode)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    validate(cfg)
    return cfg


def _report(artifact: RunArtifact) -> int:
    print(f"run artifacts in {artifact.out_dir}")
    for name, path in artifact.csv_paths.items():
        print(f"  {name}: {path}")
    if artifact.failures:
        for failure in artifact.failures:
            print(f"FAILED CHECK: {failure}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="parkfed",
        description=(
            "Federated parking-occupancy forecasting and the operator/vehicle "
            "incentive game."
        ),
    )
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory root")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fed-train", help="collaborative forecaster training")
    sub.add_parser("game-solve", help="equilibrium by gradient play + grid check")
    sub.add_parser("drl-train", help="multi-agent policy-gradient training")
    case = sub.add_parser("case-study", help="fixed capacity scenario")
    case.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    sub.add_parser("compare-linear", help="linear pricing sweep vs the game policy")
    sub.add_parser("br-sweep", help="vehicle best-response tables")

    args = parser.parse_args(argv)
    out_dir = None
    if args.out is not None:
        out_dir = args.out / args.command if args.command != "case-study" else None

    if args.command == "fed-train":
        artifact = run_fed_train(_base_config(args, "fed-train"), out_dir)
    elif args.command == "game-solve":
        artifact = run_game_solve(_base_config(args, "game-solve"), out_dir)
    elif args.command == "drl-train":
        artifact = run_drl_train(_base_config(args, "drl-train"), out_dir)
    elif args.command == "case-study":
        cfg = _base_config(args, "case-study")
        target = args.out / f"case{args.case}" if args.out is not None else None
        artifact = run_case_study(args.case, cfg, target)
    elif args.command == "compare-linear":
        artifact = compare_linear_pricing(_base_config(args, "compare-linear"), out_dir)
    elif args.command == "br-sweep":
        artifact = run_best_response_sweep(_base_config(args, "br-sweep"), out_dir)
    else:  # pragma: no cover - argparse enforces choices
        parser.error(f"unknown command {args.command}")
        return 2
    return _report(artifact)


if __name__ == "__main__":
    raise SystemExit(main())
