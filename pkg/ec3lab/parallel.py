"""
Ordered worker-pool map for independent runs (sweeps, seed averages, runtime searches)
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """
    Apply fn to every item, returning results in input order.

    fn must be a module-level function and items picklable when jobs > 1.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    workers = min(jobs, len(items))
    results: List[R] = [None] * len(items)  # type: ignore[list-item]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): index for index, item in enumerate(items)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    logger.debug(f"Completed {len(items)} tasks on {workers} workers")
    return results
