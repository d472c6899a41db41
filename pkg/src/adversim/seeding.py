"""Seed derivation and deterministic fan-out over workers.

Every replicate (or Monte Carlo chunk) gets its own generator seeded by
``derive_seed(master_seed, index)``.  The mixing is numpy's ``SeedSequence``
hash of the entropy pair ``[master_seed, index]``, truncated to one 64-bit
word.  Because each unit of work owns its generator, results do not depend
on how the units are spread over threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed for work unit ``index`` under ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed) & MASK64, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derived_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, index))


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``ADVERSIM_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("ADVERSIM_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def parallel_map(fn: Callable[[int], T], indices: Sequence[int], threads: int | None = None) -> list[T]:
    """Apply ``fn`` to each index, returning results in index order."""
    threads = resolve_threads(threads)
    if threads == 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def chunk_sizes(n: int, chunk: int) -> list[int]:
    """Split ``n`` samples into fixed-size chunks (last one may be short)."""
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])
