"""Set partitions of ``{1, ..., k}``.

Every derivative formula in the package is a sum over the partitions of the
direction indices, so this module is kept exact and small: partitions are
immutable tuples of ascending integer blocks, ordered by their minima.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TypeVar

__all__ = [
    "MAX_K",
    "Partition",
    "bell",
    "enumerate_partitions",
    "proper_partitions",
    "select_tuple",
    "successors",
]

MAX_K = 8

T = TypeVar("T")


@dataclass(frozen=True, order=True)
class Partition:
    """A partition of ``{1, ..., k}`` in canonical form.

    Blocks ascend internally and are ordered by ascending minimum, so two
    equal partitions always compare (and serialize) identically.
    """

    k: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: list[int] = []
        for block in self.blocks:
            if not block:
                raise ValueError("partition blocks must be nonempty")
            if list(block) != sorted(block):
                raise ValueError(f"block {block} is not ascending")
            seen.extend(block)
        if sorted(seen) != list(range(1, self.k + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{self.k}")
        mins = [b[0] for b in self.blocks]
        if mins != sorted(mins):
            raise ValueError("blocks must be ordered by their minima")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], k: int | None = None) -> "Partition":
        """Canonicalize an arbitrary collection of blocks."""
        canon = sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0] if b else 0)
        if k is None:
            k = sum(len(b) for b in canon)
        return cls(k, tuple(canon))

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "Partition":
        """Build from a restricted-growth string (0-based block labels)."""
        blocks: list[list[int]] = []
        for element, label in enumerate(rgs, start=1):
            if label == len(blocks):
                blocks.append([])
            blocks[label].append(element)
        return cls(len(rgs), tuple(tuple(b) for b in blocks))

    @property
    def size(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    def rgs(self) -> tuple[int, ...]:
        labels = [0] * self.k
        for i, block in enumerate(self.blocks):
            for e in block:
                labels[e - 1] = i
        return tuple(labels)

    def canonical(self) -> "Partition":
        return Partition.from_blocks(self.blocks, self.k)

    def __str__(self) -> str:
        inner = ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return "{" + inner + "}"


def _check_k(k: int, lo: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or not lo <= k <= MAX_K:
        raise ValueError(f"k must be an integer in [{lo}, {MAX_K}], got {k!r}")


def _rgs_lex(k: int):
    # restricted-growth strings a_1 = 0, a_i <= 1 + max(a_1..a_{i-1}), lexicographic
    a = [0] * k

    def rec(i: int, top: int):
        if i == k:
            yield tuple(a)
            return
        for label in range(top + 2):
            a[i] = label
            yield from rec(i + 1, max(top, label))

    yield from rec(1, 0)


def enumerate_partitions(k: int) -> list[Partition]:
    """All partitions of ``{1..k}``, lexicographic in restricted-growth order.

    ``k = 0`` gives the empty list.
    """
    _check_k(k, 0)
    if k == 0:
        return []
    return [Partition.from_rgs(r) for r in _rgs_lex(k)]


def proper_partitions(k: int) -> list[Partition]:
    """Partitions of ``{1..k}`` other than the single-block one."""
    _check_k(k, 1)
    return [p for p in enumerate_partitions(k) if p.size > 1]


def select_tuple(p: Partition, i: int, u: Sequence[T]) -> tuple[T, ...]:
    """Return ``(u_0, u_{I_i1}, ..., u_{I_in})`` for the ``i``-th block (1-based)."""
    if len(u) != p.k + 1:
        raise ValueError(f"expected {p.k + 1} items, got {len(u)}")
    if not 1 <= i <= p.size:
        raise IndexError(f"block index {i} out of range 1..{p.size}")
    return (u[0],) + tuple(u[j] for j in p.blocks[i - 1])


def successors(p: Partition) -> list[Partition]:
    """Partitions of ``{1..k+1}`` obtained from ``p``.

    First ``p`` plus the singleton ``{k+1}``, then ``k+1`` inserted into each
    block in block order.
    """
    if p.k >= MAX_K:
        raise ValueError(f"successors needs k < {MAX_K}")
    new = p.k + 1
    out = [Partition(new, p.blocks + ((new,),))]
    for i in range(p.size):
        blocks = list(p.blocks)
        blocks[i] = blocks[i] + (new,)
        out.append(Partition(new, tuple(blocks)))
    return out


def bell(k: int) -> int:
    """Bell number via the Bell triangle."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
