"""
Execution context for shift-parallel sums and concurrent sweeps.
"""

import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from ..errors import ConfigError


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Union[int, str, None]) -> int:
    """Map "auto"/None to the CPU count; validate explicit counts."""
    if threads is None or threads == "auto":
        return max(1, os.cpu_count() or 1)
    try:
        count = int(threads)
    except (TypeError, ValueError):
        raise ConfigError(f"threads must be a positive integer or 'auto': {threads!r}")
    if count < 1:
        raise ConfigError(f"threads must be >= 1: {count}")
    return count


@dataclass
class ExecutionContext:
    """
    Worker pool shared by every energy evaluation of a run.

    With deterministic=True the shift set is split into a fixed number of
    chunks regardless of the thread count and partial sums are merged with
    math.fsum in chunk order, so results are bit-identical for any pool size.
    """
    threads: int = 1
    deterministic: bool = False
    chunks: int = 8                   # chunk count in deterministic mode
    concurrent_solves: int = 1        # independent solves run side by side
    _executor: Optional[ThreadPoolExecutor] = field(default=None, init=False, repr=False)
    _sweep_executor: Optional[ThreadPoolExecutor] = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.threads = resolve_threads(self.threads)
        if self.chunks < 1 or self.concurrent_solves < 1:
            raise ConfigError("chunks and concurrent_solves must be >= 1")

    def split(self, n: int) -> List[np.ndarray]:
        """Contiguous index chunks covering range(n)."""
        count = self.chunks if self.deterministic else self.threads
        count = max(1, min(count, n)) if n > 0 else 1
        return [c for c in np.array_split(np.arange(n), count)]

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """Apply fn to items on the worker pool; results in input order."""
        if self.threads == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        return list(self._energy_pool().map(fn, items))

    def merge(self, partials: Iterable[float]) -> float:
        partials = list(partials)
        return math.fsum(partials) if self.deterministic else float(sum(partials))

    def sweep(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """
        Run independent solves, concurrently when concurrent_solves > 1.

        A separate pool is used so sweep jobs never wait on their own
        energy workers.
        """
        items = list(items)
        if self.concurrent_solves == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        return list(self._solve_pool().map(fn, items))

    def _energy_pool(self) -> ThreadPoolExecutor:
        # Sweep threads reach map() concurrently; one pool per context
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="nlhom")
            return self._executor

    def _solve_pool(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._sweep_executor is None:
                self._sweep_executor = ThreadPoolExecutor(
                    max_workers=self.concurrent_solves, thread_name_prefix="nlhom-sweep")
            return self._sweep_executor

    def close(self) -> None:
        with self._lock:
            pools = (self._executor, self._sweep_executor)
            self._executor = None
            self._sweep_executor = None
        for pool in pools:
            if pool is not None:
                pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
        return False

    def describe(self) -> dict:
        return {"threads": self.threads, "deterministic": self.deterministic,
                "chunks": self.chunks, "concurrent_solves": self.concurrent_solves}


SERIAL = ExecutionContext()
