"""
Shared argparse types and option groups.
"""
import argparse
import re
from typing import List, Optional, Tuple, Union

from fvsggm.cli.io import read_matrix_csv
from fvsggm.core.config import settings
from fvsggm.models.gaussian import EmpiricalStats, SymMatrix
from fvsggm.services.gaussian_core import empirical_stats, ridge

RANGE_PATTERN = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {value}")
    return value


def int_list(text: str) -> List[int]:
    """'0..7' (inclusive), '1,3,5' or '' for an empty list."""
    match = RANGE_PATTERN.match(text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list or a..b range, got {text!r}")


def ridge_value(text: str) -> Union[str, float]:
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ridge must be a number or 'auto', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"ridge must be nonnegative, got {value}")
    return value


def add_input_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", help="CSV of samples (rows are observations) or of a covariance")
    parser.add_argument("--covariance", action="store_true", help="treat the input CSV as a covariance matrix")
    parser.add_argument(
        "--ridge", type=ridge_value, nargs="?", const="auto", default=None,
        help="add epsilon*I to the covariance; without a value epsilon = RIDGE_SCALE * trace / n",
    )


def add_threads_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=positive_int, default=None,
                        help="worker cap (default: FVSGGM_THREADS)")


def load_statistics(args: argparse.Namespace) -> Tuple[EmpiricalStats, Optional[List[str]], Optional[float]]:
    """
    Read the input CSV into empirical moments, applying --ridge.

    Returns:
        (stats, header labels or None, ridge epsilon or None)
    """
    values, labels = read_matrix_csv(args.input)
    if args.covariance:
        stats = EmpiricalStats.from_covariance(SymMatrix(values))
    else:
        stats = empirical_stats(values)

    epsilon = None
    if args.ridge is not None:
        cov, epsilon = ridge(stats.cov, None if args.ridge == "auto" else args.ridge, settings.RIDGE_SCALE)
        stats = EmpiricalStats(mean=stats.mean, cov=cov, samples=stats.samples)
    return stats, labels, epsilon
