"""Thread fan-out for independent solves."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["THREADS_ENV", "worker_count", "parallel_map"]

THREADS_ENV = "MINPART_THREADS"


def worker_count() -> int:
    """Worker cap from ``MINPART_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]`` in input order, spread over worker threads."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
