"""Ordered parallel map over independent tasks.

Simulation kernels release the GIL, so a thread pool is enough. Results
come back in task order whatever the completion order, which keeps every
reduction deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    return os.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], tasks: Iterable[T], threads: int | None = 1) -> list[R]:
    tasks = list(tasks)
    n = default_threads() if threads is None else int(threads)
    if n < 1:
        raise ValueError("threads must be >= 1")
    if n == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))
