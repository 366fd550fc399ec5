import multiprocessing as mp
from typing import Callable, Iterable, Sequence

import pc_logging


class WorkerPool:
    """
    Data-parallel helper over a multiprocessing pool.

    With one worker everything runs inline in the calling process, which is
    the default and what tests use. `map` keeps input order, so reductions
    over its results are deterministic regardless of the worker count.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._pool = None

    def __enter__(self) -> "WorkerPool":
        if self.workers > 1:
            pc_logging.log_debug(f"Starting a pool of {self.workers} workers")
            self._pool = mp.Pool(self.workers)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def terminate(self) -> None:
        if self._pool is not None:
            self._pool.terminate()
            self._pool = None

    def map(self, func: Callable, args: Sequence[tuple]) -> list:
        """Ordered starmap."""
        if self._pool is None or len(args) <= 1:
            return [func(*a) for a in args]
        return self._pool.starmap(func, args)

    def unordered(self, func: Callable, args: Sequence[tuple]) -> Iterable:
        """Results in completion order."""
        if self._pool is None or len(args) <= 1:
            return (func(*a) for a in args)
        return self._pool.imap_unordered(_star, [(func, a) for a in args])


def _star(packed):
    func, args = packed
    return func(*args)
