"""Deterministic work-pool helpers.

Replicates get independent RNG streams spawned from one master seed and
results are collected in submission order, so output is bitwise identical
for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV_VAR = "SSTPCA_THREADS"


def resolve_threads(explicit: "int | None" = None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def spawn_seeds(master_seed: int, n: int) -> list:
    return np.random.SeedSequence(master_seed).spawn(n)


def ordered_map(fn, items, n_threads: int = 1) -> list:
    items = list(items)
    if n_threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(fn, items))
