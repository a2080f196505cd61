"""
Runs independent (k, N) cells of a parameter sweep, optionally on a thread
pool. Results come back sorted by (k, N).
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Sequence, TypeVar

from utils import log

logger = logging.getLogger(__name__)

T = TypeVar("T")
Cell = tuple[int, int]


def run_sweep(
    cells: Sequence[Cell],
    fn: Callable[[int, int], T],
    workers: int = 1,
    describe: Callable[[T], str] = str,
) -> list[T]:
    """
    Evaluate fn(k, N) for every cell.

    Exceptions from a cell propagate after it is reported; remaining cells
    are cancelled.
    """
    cells = sorted(cells)
    total = len(cells)
    results: dict[Cell, T] = {}

    def _report(done: int, cell: Cell, result: T) -> None:
        log.progress(done, total, log.cell_label(*cell), f"{log.C.OK}{describe(result)}{log.C.RESET}")

    if workers <= 1:
        for i, cell in enumerate(cells, 1):
            results[cell] = fn(*cell)
            _report(i, cell, results[cell])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(fn, *cell): cell for cell in cells}
            for i, future in enumerate(as_completed(futures), 1):
                cell = futures[future]
                try:
                    results[cell] = future.result()
                except Exception:
                    log.err(f"{log.cell_label(*cell)} failed")
                    for other in futures:
                        other.cancel()
                    raise
                _report(i, cell, results[cell])

    logger.debug(f"Sweep finished: {total} cells, {workers} workers")
    return [results[cell] for cell in cells]
