"""Command-line experiment runner.

Verbs: build-data, train, eval, sweep, report.  Exit codes: 0 success,
2 configuration or input error, 3 numerical divergence during training.
"""

from __future__ import annotations

import argparse
import sys

from .data import ConfigError, FormatError
from .evaluation import UndefinedMetric
from .nn import TrainingDiverged

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", help="named preset (see cleanvae.presets)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cleanvae",
                                     description="systematic-error detection and repair")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build-data", help="generate or load a dataset and corrupt it")
    _add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train", help="train one model on a dataset bundle")
    _add_config_args(p)
    p.add_argument("--data", required=True, help="dataset bundle directory")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model", default=None, help="model kind override (uses config presets)")

    p = sub.add_parser("eval", help="score, detect, and repair with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float, default=None, help="detection threshold override")
    p.add_argument("--split", default="train", choices=["train", "val", "test", "all"])

    p = sub.add_parser("sweep", help="run a grid of (model, noise, labels, seed) cells")
    _add_config_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="aggregate per-cell reports from a sweep directory")
    p.add_argument("--dir", required=True)
    return parser


def run(argv=None) -> int:
    from . import experiments as ex

    args = build_parser().parse_args(argv)
    try:
        if args.verb == "build-data":
            cfg = ex.load_config(args.config, args.preset)
            out = ex.cmd_build_data(cfg, args.out, seed=args.seed)
            print(f"wrote dataset bundle to {out}")
        elif args.verb == "train":
            cfg = ex.load_config(args.config, args.preset)
            out = ex.cmd_train(cfg, args.data, args.out, seed=args.seed,
                               model_kind=args.model)
            print(f"wrote checkpoint and history to {out}")
        elif args.verb == "eval":
            report = ex.cmd_eval(args.checkpoint, args.data, args.out,
                                 gamma=args.gamma, split=args.split)
            print(report.CSV_HEADER)
            print(report.csv_row())
        elif args.verb == "sweep":
            cfg = ex.load_config(args.config, args.preset)
            result = ex.cmd_sweep(cfg, args.out)
            print(ex.format_aggregate_table(result["aggregates"]))
            if result["failures"]:
                print(f"{len(result['failures'])} cell(s) failed; see failures.json",
                      file=sys.stderr)
        elif args.verb == "report":
            rows = ex.cmd_report(args.dir)
            print(ex.format_aggregate_table(rows))
    except (ConfigError, FormatError, UndefinedMetric, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
