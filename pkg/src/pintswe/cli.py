"""Command-line entry point.

Subcommands: run-serial, run-pint, stability, viscosity-table.  Exit codes:
0 success, 2 configuration error, 3 numerical blow-up (partial outputs are
still written).
"""

from __future__ import annotations

import argparse
import sys

from . import runner
from .config import PRESETS, ConfigError, load


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", default=None,
                   help="JSON configuration file")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="built-in configuration (file values override it)")
    p.add_argument("--out", metavar="DIR", default="out",
                   help="output directory (default: out)")
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for slice propagation (default: 1)")


COMMANDS = {
    "run-serial": runner.cmd_run_serial,
    "run-pint": runner.cmd_run_pint,
    "stability": runner.cmd_stability,
    "viscosity-table": runner.cmd_viscosity_table,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pintswe",
        description="Parallel-in-time laboratory for the rotating shallow "
                    "water equations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)
    try:
        cfg = load(args.config, args.preset)
        return COMMANDS[args.command](cfg, args.out, workers=args.workers)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
