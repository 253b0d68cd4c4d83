"""Subset/partition index tables shared by both kernels.

Derivative processes are indexed by bitmasks over the direction indices:
mask 0 is the base process, bit ``i-1`` stands for direction ``u_i``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..partitions import enumerate_partitions, select_tuple

MAX_DIRECTIONS = 4


def mask_of(indices) -> int:
    return sum(1 << (i - 1) for i in indices)


def mask_order(k: int) -> list[int]:
    """Nonzero masks ordered by subset size, then value."""
    return sorted(range(1, 1 << k), key=lambda a: (bin(a).count("1"), a))


@lru_cache(maxsize=None)
def subset_partitions(k: int) -> dict[int, tuple[tuple[int, ...], ...]]:
    """For each nonzero mask ``I``, the partitions of ``I`` as tuples of block masks.

    Partitions of ``I`` are those of ``{1..|I|}`` relabelled through the
    ascending elements of ``I``; block order follows block minima.
    """
    if not 0 <= k <= MAX_DIRECTIONS:
        raise ValueError(f"at most {MAX_DIRECTIONS} directions are supported, got {k}")
    table = {}
    for a in range(1, 1 << k):
        labels = (0,) + tuple(i + 1 for i in range(k) if a >> i & 1)
        parts = []
        for p in enumerate_partitions(len(labels) - 1):
            parts.append(tuple(mask_of(select_tuple(p, i, labels)[1:]) for i in range(1, p.size + 1)))
        table[a] = tuple(parts)
    return table


@lru_cache(maxsize=None)
def flat_tables(k: int):
    """CSR-style arrays ``(part_ptr, block_ptr, block_mask)`` for the compiled kernel."""
    table = subset_partitions(k)
    part_ptr = [0, 0]
    block_ptr = [0]
    block_mask: list[int] = []
    for a in range(1, 1 << k):
        for blocks in table[a]:
            block_mask.extend(blocks)
            block_ptr.append(len(block_mask))
        part_ptr.append(len(block_ptr) - 1)
    arrs = (np.array(part_ptr, dtype=np.int64), np.array(block_ptr, dtype=np.int64),
            np.array(block_mask if block_mask else [0], dtype=np.int64))
    for arr in arrs:
        arr.setflags(write=False)
    return arrs
