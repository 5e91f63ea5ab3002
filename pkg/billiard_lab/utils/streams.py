"""
Seeded random streams and the chunked worker pool.

All randomness of a run derives from one 64 bit master seed. Work is cut into a fixed
number of partitions, each with its own child of numpy's SeedSequence; partition results
are reduced in partition order. Results therefore depend on (master seed, partitions)
and not on the number of workers.
"""
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from billiard_lab.utils.config import install_settings, settings
from billiard_lab.utils.errors import BudgetExceededError

logger = logging.getLogger(__name__)

_progress = {"enabled": True}


def set_progress(enabled: bool):
    """
    Switches the progress bars of run_chunks on or off.
    """
    _progress["enabled"] = enabled


def spawn_seeds(master_seed: int, count: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(int(master_seed)).spawn(count)


def stream(master_seed: int, index: int = 0) -> np.random.Generator:
    """
    Generator of the index-th child stream of the master seed.
    """
    return np.random.default_rng(spawn_seeds(master_seed, index + 1)[index])


def partition(total: int, parts: Optional[int] = None) -> List[int]:
    """
    Splits `total` work items into at most `parts` near-equal non-empty shares.
    """
    if parts is None:
        parts = settings()["Parallel"]["partitions"]
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def run_chunks(func: Callable[..., Any], tasks: Sequence[tuple], workers: int = 1, desc: str = "",
               deadline: Optional[float] = None) -> List[Any]:
    """
    Evaluates func(*task) for every task and returns the results in task order.

    Parameters
    ----------
    func
        module level function (it is pickled for the worker processes).
    tasks
        argument tuples.
    workers
        number of worker processes; 1 runs inline.
    desc
        label of the progress bar.
    deadline
        time.monotonic() value after which the run is aborted.

    Raises
    ------
    BudgetExceededError
        if the deadline passes before all tasks are done.
    """
    disable = not (_progress["enabled"] and sys.stderr.isatty())
    results = []
    started = time.monotonic()
    if workers <= 1:
        for task in tqdm(tasks, desc=desc, disable=disable):
            results.append(func(*task))
            _check_deadline(deadline)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=install_settings,
                                 initargs=(settings().to_dict(),)) as pool:
            futures = [pool.submit(func, *task) for task in tasks]
            for future in tqdm(futures, desc=desc, disable=disable):
                results.append(future.result())
                if deadline is not None and time.monotonic() > deadline:
                    for f in futures:
                        f.cancel()
                    _check_deadline(deadline)
    logger.debug("%s: %d chunks on %d workers in %.2fs", desc or "chunks", len(tasks), workers,
                 time.monotonic() - started)
    return results


def _check_deadline(deadline: Optional[float]):
    if deadline is not None and time.monotonic() > deadline:
        raise BudgetExceededError("time budget exceeded")
