"""Command-line parser with one subcommand per module."""
import argparse

from commands import bgsub, diagnose, simulate, solve_linear, sweep_mu


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="badmm",
        description="Multi-block Bregman ADMM experiments: decomposition, linear systems and diagnostics.",
    )
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    parser.add_argument("--log-format", choices=["json", "console"], default=None, help="Override LOG_FORMAT")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate.register(subparsers)
    bgsub.register(subparsers)
    diagnose.register(subparsers)
    solve_linear.register(subparsers)
    sweep_mu.register(subparsers)
    return parser
