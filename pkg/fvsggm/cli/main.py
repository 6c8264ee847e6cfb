"""
Command-line entry point.
"""
import logging
import sys
from typing import List, Optional

from fvsggm.cli.router import build_parser
from fvsggm.core.config import settings
from fvsggm.core.exceptions import EXIT_OK, EXIT_RESOURCE, FvsGgmError
from fvsggm.core.logging import configure_logging

logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one command and map errors to exit codes.

    Returns:
        0 on success, 2 for input errors (argparse usage errors included),
        3 for numerical or invariant errors, 4 when a resource cap is hit
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level or settings.LOG_LEVEL)
    try:
        args.func(args)
    except FvsGgmError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK
