"""Command-line entry point: ``qchain-sim <config.json> [--seed N] [--format json|text] [--out PATH]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .report import emit
from .scenarios import ConfigError, load_config, run_scenario

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_EXPECTATION_FAILED = 3


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qchain-sim",
        description="Run a quantum-threat/defense blockchain scenario and print its report.",
    )
    parser.add_argument("config", help="path to a scenario config JSON file")
    parser.add_argument("--seed", type=_seed, help="master seed; overrides the config file")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--out", help="write the report here instead of standard output")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed)
    except FileNotFoundError:
        print(f"error: config: no such file {args.config}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    report = run_scenario(config)
    data = emit(report, args.format)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return EXIT_OK if report.passed else EXIT_EXPECTATION_FAILED


if __name__ == "__main__":
    sys.exit(main())
