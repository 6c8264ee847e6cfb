"""
Command-line router configuration.
"""
import argparse

from fvsggm import __version__
from fvsggm.cli.commands import gen, infer, learn, sweep

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvsggm",
        description="Learning and inference in Gaussian graphical models with small feedback vertex sets",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None,
                        help="log level (default: FVSGGM_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    # Include command groups
    learn.register(commands)
    infer.register(commands)
    gen.register(commands)
    sweep.register(commands)
    return parser
