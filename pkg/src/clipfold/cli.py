"""Command-line experiment runner.

Subcommands map one-to-one onto the experiment kinds; every run reads a
config file, applies flag overrides, executes and emits the report.  All
randomness flows from the single master seed.  Exit codes: 0 success,
1 property failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import config_from_file
from .errors import ClipfoldError, ConfigurationError
from .experiments import run_experiment
from .reporting import emit_report, read_json

SUBCOMMAND_KIND = {
    "sweep": "lambda_sweep",
    "complexity": "sample_complexity",
    "verify": "property_suite",
    "recover": "recovery_bench",
    "certify": "certify",
}

THREADS_ENV = "CLIPFOLD_THREADS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clipfold", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*SUBCOMMAND_KIND, "report"):
        p = sub.add_parser(name)
        if name == "report":
            p.add_argument("source", help="previously written JSON report")
        else:
            p.add_argument("--config", required=True, help="flat key=value or JSON config file")
            p.add_argument("--seed", type=int, default=None, help="master seed override")
            p.add_argument("--threads", type=int, default=None, help="worker thread count")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--format",
            default="all",
            choices=["csv", "json", "svg", "all"],
            help="report format (default: all three)",
        )
    return parser


def _formats(arg: str) -> tuple[str, ...]:
    return ("csv", "json", "svg") if arg == "all" else (arg,)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            report = read_json(args.source)
            paths = emit_report(report, args.out or ".", _formats(args.format))
            for p in paths:
                print(p)
            return 0

        overrides: dict = {"experiment": SUBCOMMAND_KIND[args.command]}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.out is not None:
            overrides["out"] = args.out
        env_threads = os.environ.get(THREADS_ENV)
        if env_threads is not None:
            try:
                overrides["threads"] = int(env_threads)
            except ValueError as e:
                raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {env_threads!r}") from e

        cfg = config_from_file(args.config, overrides)
        report = run_experiment(cfg)
        paths = emit_report(report, cfg.out, _formats(args.format))
        for p in paths:
            print(p)
        if args.command == "verify":
            for row in report.rows:
                status = "pass" if row.estimate == 1.0 else "FAIL"
                print(f"{row.extra.get('property')}: {status}")
            if not report.extra.get("all_passed", False):
                return 1
        return 0
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except ClipfoldError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
