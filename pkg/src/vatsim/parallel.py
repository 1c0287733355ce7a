"""Order-preserving map over independent trials, optionally in worker processes.

Workers are plain processes that share nothing.  BLAS is pinned to one
thread everywhere, so each trial's floating-point path does not depend on
how many workers run.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from threadpoolctl import threadpool_limits

WORKERS_ENV = "VAT_SIM_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _init_worker():
    threadpool_limits(1)


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    items = list(items)
    workers = min(worker_count(workers), max(1, len(items)))
    if workers == 1:
        with threadpool_limits(1):
            return [fn(x) for x in items]
    chunk = max(1, math.ceil(len(items) / (4 * workers)))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
