"""
Per-unit random streams and the worker pool.

Every replicate, station or grid cell derives its own generator from
(master_seed, *unit_index) through SeedSequence hashing, so results do not
depend on which worker ran a unit or in what order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def unit_seed(master_seed: int, *index: int) -> list[int]:
    return [int(master_seed), *(int(i) for i in index)]


def unit_rng(master_seed: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(unit_seed(master_seed, *index))


def run_units(fn: Callable[[T], R], units: Sequence[T] | Iterable[T], threads: int = 1) -> list[R]:
    """fn over units, results in unit order regardless of thread count."""
    units = list(units)
    if threads <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    logger.debug("running %d units on %d threads", len(units), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, units))
