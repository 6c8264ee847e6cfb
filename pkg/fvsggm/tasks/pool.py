"""
Bounded worker pool for independent jobs.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from fvsggm.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: the explicit value, else FVSGGM_THREADS, never below 1."""
    value = settings.THREADS if threads is None else threads
    return max(1, int(value))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item, preserving input order.

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker cap (default: settings.THREADS)

    Returns:
        Results in the order of items
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]

    logger.debug("Running %d jobs on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
