"""Command-line entry point: ``lnlab <subcommand> --config <path> ...``.

Subcommands are the experiment names (audit, bounds, simulate, contraction,
discretize, stability, scaling, sgld-compare, rate).  Without --config the
documented defaults apply.  Exit codes: 0 on completion, 2 on config/schema
errors, 3 on I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment
from .reporting import write_results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lnlab",
        description="Numerical laboratory for noisy gradient descent dynamics "
                    "and their bound constants.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--config", default=None, help="key-value config file")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--replicas", type=int, default=None,
                       help="override the replica count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"experiment": args.experiment}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.replicas is not None:
        overrides["replicas"] = args.replicas
    try:
        if args.config is not None:
            config = load_config(args.config, overrides=overrides)
        else:
            config = ExperimentConfig(**overrides)
            config.validate()
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_experiment(config)
        outdir = write_results(result, config.out)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3

    if result.text_report:
        print(result.text_report)
    for v in result.verdicts:
        print(f"[{v.outcome.upper()}] {v.name}")
    print(f"wrote {outdir}/results.csv, summary.txt"
          + (f", {len(result.figures)} figure(s)" if result.figures else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
