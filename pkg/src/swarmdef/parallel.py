"""Worker-count policy and an order-preserving parallel map.

The SWARM_THREADS environment variable caps process parallelism; 0 or
unset means one worker per CPU. Results always come back in input order,
so parallel and sequential execution produce identical aggregates.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from .errors import ConfigurationError

THREADS_ENV_VAR = "SWARM_THREADS"

_T = TypeVar("_T")
_R = TypeVar("_R")


def worker_count(n_tasks: int | None = None) -> int:
    """Number of worker processes to use, honoring SWARM_THREADS."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        limit = 0
    else:
        try:
            limit = int(raw)
        except ValueError:
            raise ConfigurationError(
                f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
        if limit < 0:
            raise ConfigurationError(
                f"{THREADS_ENV_VAR} must be >= 0, got {limit}")
    if limit == 0:
        limit = os.cpu_count() or 1
    if n_tasks is not None:
        limit = max(1, min(limit, n_tasks))
    return limit


def parallel_map(fn: Callable[[_T], _R], items: Iterable[_T],
                 chunksize: int | None = None) -> list[_R]:
    """Map fn over items, in processes when allowed, preserving input order."""
    seq: Sequence[_T] = list(items)
    workers = worker_count(len(seq))
    if workers <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    if chunksize is None:
        chunksize = max(1, len(seq) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, seq, chunksize=chunksize))
