"""Thread pool sized by the ``NSD_THREADS`` environment variable."""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "NSD_THREADS"


def worker_count(default: int = 1) -> int:
    """Worker cap from ``NSD_THREADS`` (invalid or non-positive values fall back)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        count = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", THREADS_ENV, raw)
        return default
    return max(1, count)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, results in submission order.

    Runs inline when only one worker is allowed.
    """
    jobs = list(items)
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))
