"""Seeded random streams.

Every stream is numpy's Philox-4x64 counter-based bit generator keyed by
``SeedSequence((master_seed, *stream_index))``. A trial's stream depends only on
the master seed and its index, so results do not depend on scheduling or on the
number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

ALGORITHM = "numpy.random.Philox (4x64) seeded by SeedSequence((master_seed, *index))"
WORKERS_ENV = "DIHPLAB_WORKERS"

R = TypeVar("R")


def stream(master_seed: int, *index: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, *index)``."""
    seq = np.random.SeedSequence([int(master_seed), *(int(i) for i in index)])
    return np.random.Generator(np.random.Philox(seq))


def worker_count() -> int:
    """Worker processes requested through ``DIHPLAB_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_trials(fn: Callable[..., R], arg_list: Sequence[tuple], workers: int | None = None) -> list[R]:
    """Apply ``fn(*args)`` to every tuple, in order, optionally in a process pool.

    Output order always matches input order, so aggregation is deterministic.
    """
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(arg_list) < 2:
        return [fn(*args) for args in arg_list]
    chunk = max(1, len(arg_list) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*arg_list), chunksize=chunk))
