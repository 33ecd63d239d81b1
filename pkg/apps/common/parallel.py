"""
Bounded worker pool for independent items (θ-samples, trajectory chunks).
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from django.conf import settings

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def worker_count(threads: Optional[int] = None) -> int:
    """Resolve the worker cap: explicit value, then settings, then MULTISLICE_THREADS."""
    if threads is None:
        threads = getattr(settings, 'MULTISLICE_THREADS', None)
    if threads is None:
        threads = int(os.environ.get('MULTISLICE_THREADS', '1'))
    return max(1, int(threads))


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> list[R]:
    """
    Apply ``func`` to every item, preserving input order in the result.

    Args:
        func: Pure function of a single item
        items: Work items
        threads: Worker cap (defaults to worker_count())

    Returns:
        List of results aligned with ``items``
    """
    items = list(items)
    workers = min(worker_count(threads), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug(f'parallel_map: {len(items)} items on {workers} workers')
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
