"""Command-line entry point.

One subcommand per scenario family; every subcommand reads a flat
key = value config file and runs one scenario in one process:

    relfluid run2d        --config flow.txt [--output DIR] [--seed N] [--threads N]
    relfluid run3d        --config flow.txt ...    (barotropic or general mode)
    relfluid bracket-check --config check.txt ...
    relfluid limit-study  --config sweep.txt ...
    relfluid baroclinic   --config budget.txt ...

Exit codes: 0 success, 2 configuration/validation error, 3 runtime
model error (superluminal speed, density floor, solver divergence) or
a failed structure check.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import parse_config
from .errors import ConfigError
from .runner import execute

_SUBCOMMAND_MODES = {
    "run2d": ("run2d",),
    "run3d": ("run3d_barotropic", "run3d_general"),
    "bracket-check": ("bracket_check",),
    "limit-study": ("limit_study",),
    "baroclinic": ("baroclinic",),
}


def _seed_value(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relfluid",
        description="Structure-preserving relativistic fluid simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, modes in _SUBCOMMAND_MODES.items():
        p = sub.add_parser(
            command,
            help=f"run a config with mode in {modes}",
        )
        p.add_argument("--config", required=True, help="path to key = value config")
        p.add_argument("--output", help="output directory (overrides config)")
        p.add_argument("--seed", type=_seed_value, help="RNG seed (overrides config)")
        p.add_argument("--threads", type=_positive_int, help="kernel thread count")
    return parser


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    allowed = _SUBCOMMAND_MODES[args.command]
    if config.mode not in allowed:
        print(
            f"configuration error: subcommand {args.command!r} requires mode in "
            f"{allowed}, but the config sets mode = {config.mode!r}",
            file=sys.stderr,
        )
        return 2

    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return execute(config, output_dir=args.output, threads=args.threads)


if __name__ == "__main__":
    raise SystemExit(main())
