"""
Parallel map over indexed sweep tasks.

Results come back ordered by task index whatever the pool size, so every
reduction downstream (sup, fsum, CSV row order) is reproducible.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

from src.config.settings import ZLAB_WORKERS

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = ZLAB_WORKERS
    return max(1, int(workers))


def run_sweep(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = 1,
              label: str = "sweep") -> List[R]:
    """
    Apply ``fn`` to every task and return the results in task order.

    ``workers <= 1`` runs inline. The exception of the lowest failing task
    index is re-raised after the pool has drained.
    """
    n = len(tasks)
    workers = min(resolve_workers(workers), max(n, 1))
    if workers <= 1 or n <= 1:
        return [fn(t) for t in tasks]

    results: List[Optional[R]] = [None] * n
    errors: Dict[int, BaseException] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
        for future in as_completed(future_to_index):
            i = future_to_index[future]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.error(f"[{label}] task {i} failed: {e}")
                errors[i] = e
    if errors:
        raise errors[min(errors)]
    logger.debug(f"[{label}] {n} tasks on {workers} workers")
    return results  # type: ignore[return-value]
