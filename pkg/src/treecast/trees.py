"""Index arithmetic and partition logic for regular trees.

Vertices are addressed by 1-based coordinates ``(level, index)`` with
``index`` running over ``1..r**level``; the parent of ``(n, s)`` is
``(n-1, ceil(s/r))``.  Internally the kernels use flat 0-based offsets, but
every public contract speaks 1-based coordinates.

Two block structures drive the correction schemes:

* :class:`BlockPartition` cuts a level into consecutive fixed-size blocks,
  with an undersized trailing *leftover* that is excluded from downstream
  statistics;
* :class:`DescentBlockPartition` cuts a level that is a multiple of ``k``
  into blocks of ``r**k`` vertices, each block being exactly the set of
  ``k``-generation descendants of one vertex ``k`` levels up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .budget import check_vertices


@dataclass(frozen=True)
class Vertex:
    """A tree vertex in 1-based ``(level, index)`` coordinates."""

    level: int
    index: int

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError(f"vertex level must be >= 0, got {self.level}")
        if self.index < 1:
            raise ValueError(f"vertex index is 1-based, got {self.index}")


@dataclass(frozen=True)
class RegularTreeSpec:
    """A regular tree with forward branching rate ``r`` truncated at ``depth``."""

    r: int
    depth: int
    vertex_budget: int | None = None

    def __post_init__(self) -> None:
        if self.r < 2:
            raise ValueError(f"branching rate must be >= 2, got {self.r}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        check_vertices(self.r**self.depth, self.vertex_budget)

    def level_size(self, level: int) -> int:
        """Number of vertices at ``level`` (``r**level``)."""
        if not 0 <= level <= self.depth:
            raise ValueError(f"level {level} outside 0..{self.depth}")
        return self.r**level

    def contains(self, v: Vertex) -> bool:
        return 0 <= v.level <= self.depth and 1 <= v.index <= self.r**v.level


def parent_of(v: Vertex, spec: RegularTreeSpec) -> Vertex:
    """Parent coordinate of ``v``: ``(level-1, ceil(index/r))``."""
    if v.level == 0:
        raise ValueError("the root has no parent")
    if not spec.contains(v):
        raise ValueError(f"{v} is not a vertex of the tree")
    return Vertex(v.level - 1, (v.index + spec.r - 1) // spec.r)


def children_range(v: Vertex, spec: RegularTreeSpec) -> range:
    """The ``r`` consecutive child indices of ``v`` at level ``v.level + 1``.

    The returned ``range`` contains 1-based indices ``s`` such that
    ``parent_of((v.level+1, s)) == v``.
    """
    if v.level >= spec.depth:
        raise ValueError(
            f"level {v.level} has no children within depth {spec.depth}"
        )
    if not spec.contains(v):
        raise ValueError(f"{v} is not a vertex of the tree")
    first = spec.r * (v.index - 1) + 1
    return range(first, first + spec.r)


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive fixed-size blocks over one level, plus a discarded leftover.

    Block ``b`` (0-based) covers 1-based indices
    ``b*block_size + 1 .. (b+1)*block_size``; the leftover, if any, is the
    trailing ``level_size - n_blocks*block_size`` indices and is excluded
    from all downstream statistics.
    """

    level: int
    level_size: int
    block_size: int
    n_blocks: int = field(init=False)

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError(f"block size must be >= 1, got {self.block_size}")
        if self.level_size < 0:
            raise ValueError("level size must be >= 0")
        object.__setattr__(self, "n_blocks", self.level_size // self.block_size)

    @property
    def covered(self) -> int:
        """Number of indices inside full blocks."""
        return self.n_blocks * self.block_size

    def blocks(self) -> Iterator[range]:
        """Iterate 1-based index ranges of the full blocks."""
        m = self.block_size
        for b in range(self.n_blocks):
            yield range(b * m + 1, (b + 1) * m + 1)

    def leftover(self) -> range:
        """1-based indices of the discarded trailing block (possibly empty)."""
        return range(self.covered + 1, self.level_size + 1)


@dataclass(frozen=True)
class DescentBlockPartition:
    """Blocks of all ``r**k`` descendants, ``k`` generations down, per ancestor.

    Defined at levels that are positive multiples of ``k``; block ``b``
    (0-based) is exactly the descendant set of the level-``(level-k)`` vertex
    with index ``b+1``, covering 1-based indices
    ``b*r**k + 1 .. (b+1)*r**k``.
    """

    level: int
    k: int
    r: int
    block_size: int = field(init=False)
    n_blocks: int = field(init=False)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"correction period must be >= 1, got {self.k}")
        if self.level < 1 or self.level % self.k != 0:
            raise ValueError(
                f"level {self.level} is not a positive multiple of k={self.k}"
            )
        object.__setattr__(self, "block_size", self.r**self.k)
        object.__setattr__(self, "n_blocks", self.r ** (self.level - self.k))

    @property
    def level_size(self) -> int:
        return self.n_blocks * self.block_size

    @property
    def covered(self) -> int:
        return self.level_size

    def blocks(self) -> Iterator[range]:
        """Iterate 1-based index ranges; block ``b`` descends from vertex b+1."""
        m = self.block_size
        for b in range(self.n_blocks):
            yield range(b * m + 1, (b + 1) * m + 1)

    def leftover(self) -> range:
        """Descent partitions never have a leftover."""
        return range(self.level_size + 1, self.level_size + 1)

    def ancestor_of_block(self, block: int) -> Vertex:
        """The level-``(level-k)`` vertex whose descent is block ``block``."""
        if not 0 <= block < self.n_blocks:
            raise ValueError(f"block {block} outside 0..{self.n_blocks - 1}")
        return Vertex(self.level - self.k, block + 1)


Partition = BlockPartition | DescentBlockPartition


def partition_consecutive(level_size: int, block_size: int, level: int = 0) -> BlockPartition:
    """Partition ``level_size`` consecutive indices into fixed-size blocks.

    Produces ``level_size // block_size`` full blocks plus a leftover of
    ``level_size % block_size`` trailing indices; blocks and leftover
    together cover every index exactly once.
    """
    if block_size < 1:
        raise ValueError(f"block size must be >= 1, got {block_size}")
    return BlockPartition(level=level, level_size=level_size, block_size=block_size)


def descent_partition(level: int, k: int, spec: RegularTreeSpec) -> DescentBlockPartition:
    """Partition ``level`` into the descendant blocks of level ``level - k``."""
    if level > spec.depth:
        raise ValueError(f"level {level} beyond tree depth {spec.depth}")
    return DescentBlockPartition(level=level, k=k, r=spec.r)


@dataclass(frozen=True)
class RandomTreeSample:
    """Offspring counts of the random renormalized tree left by minority removal.

    ``offspring_counts[i]`` holds, for renormalized generation ``i``, the
    number of renormalized children of each surviving vertex (one entry per
    survivor, in tree order).
    """

    offspring_counts: tuple[np.ndarray, ...]

    def all_counts(self) -> np.ndarray:
        if not self.offspring_counts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.asarray(c).ravel() for c in self.offspring_counts])
