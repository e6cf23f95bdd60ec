"""Bit-packed Monte Carlo kernel for the noisy broadcast process.

Signals live as packed bits: one uint8 row per replicate, most significant
bit first, bit 1 for +1 and bit 0 for -1, padding bits zero.  A generation
step repeats each parent bit ``r`` times and XORs a Bernoulli flip mask onto
it, so the global spin-flip symmetry is exact by construction.  Majority
statistics reduce rows with a byte-level popcount table.

All randomness flows through :class:`~treecast.rng.SeedSpec` streams keyed by
(purpose, level, replicate block); every kernel draws full replicate blocks
and slices, so a replicate's trajectory does not depend on how many other
replicates run beside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .budget import check_vertices
from .channel import ChannelParams
from .rng import REPLICATE_BLOCK, SeedSpec, bernoulli_bits, replicate_blocks

__all__ = [
    "GenerationSignals",
    "majority_statistic",
    "packed_width",
    "popcount_rows",
    "repeat_packed",
    "sample_next_generation",
    "sample_root",
]

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(
    axis=1, dtype=np.uint8
)


def packed_width(size: int) -> int:
    """Bytes per replicate row for ``size`` packed signal bits."""
    return (size + 7) // 8


def popcount_rows(packed: np.ndarray) -> np.ndarray:
    """Number of set bits per row of a packed array."""
    return _POPCOUNT[packed].sum(axis=1, dtype=np.int64)


@dataclass(frozen=True)
class GenerationSignals:
    """One level of signals for a batch of replicates, bit-packed.

    ``packed[i]`` holds replicate ``i``'s ``size`` signs as bits (MSB first,
    1 for +1); trailing padding bits within the last byte are zero.
    """

    level: int
    size: int
    n_replicates: int
    packed: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.n_replicates, packed_width(self.size))
        if self.packed.shape != expected or self.packed.dtype != np.uint8:
            raise ValueError(
                f"packed array must be uint8 with shape {expected}, got "
                f"{self.packed.dtype} {self.packed.shape}"
            )

    @classmethod
    def from_signs(cls, signs: np.ndarray, level: int) -> "GenerationSignals":
        """Pack an array of +-1 signs; a 1-d array means a single replicate."""
        signs = np.asarray(signs)
        if signs.ndim == 1:
            signs = signs[None, :]
        if not np.isin(signs, (-1, 1)).all():
            raise ValueError("signals must be +1 or -1")
        packed = np.packbits((signs > 0).astype(np.uint8), axis=1)
        return cls(
            level=level,
            size=signs.shape[1],
            n_replicates=signs.shape[0],
            packed=packed,
        )

    def bits(self) -> np.ndarray:
        """Unpacked 0/1 bits, shape (n_replicates, size)."""
        return np.unpackbits(self.packed, axis=1, count=self.size)

    def to_signs(self) -> np.ndarray:
        """Unpacked +-1 signs, shape (n_replicates, size), int8."""
        return (2 * self.bits().astype(np.int8) - 1).astype(np.int8)


def majority_statistic(
    g: GenerationSignals, alive: np.ndarray | None = None
) -> np.ndarray:
    """Signed level sums, one per replicate: (#+1) - (#-1).

    With an ``alive`` packed mask of the same shape, the sum runs over alive
    vertices only.
    """
    if alive is None:
        return 2 * popcount_rows(g.packed) - g.size
    if alive.shape != g.packed.shape:
        raise ValueError(
            f"alive mask shape {alive.shape} does not match signals {g.packed.shape}"
        )
    return 2 * popcount_rows(g.packed & alive) - popcount_rows(alive)


def sample_root(
    seed: SeedSpec, n_replicates: int, pin: int | None = +1
) -> GenerationSignals:
    """Level-0 signals: pinned to ``pin`` for conditional-on-root experiments,
    or an independent fair sign per replicate when ``pin`` is None."""
    if n_replicates < 1:
        raise ValueError(f"need at least one replicate, got {n_replicates}")
    packed = np.empty((n_replicates, 1), dtype=np.uint8)
    if pin is not None:
        if pin not in (-1, 1):
            raise ValueError(f"pinned root must be +1 or -1, got {pin}")
        packed[:] = 0x80 if pin == 1 else 0x00
    else:
        for block, rows_slice, rows in replicate_blocks(n_replicates):
            gen = seed.generator("root", level=0, block=block)
            coins = bernoulli_bits(gen, 0.5, REPLICATE_BLOCK, 1)
            packed[rows_slice] = coins[:rows]
    return GenerationSignals(level=0, size=1, n_replicates=n_replicates, packed=packed)


def repeat_packed(packed: np.ndarray, size: int, r: int) -> np.ndarray:
    """Repeat each of ``size`` bits ``r`` times within every row, repacked.

    Used both to seed children with their parent's sign and to propagate
    alive masks (children of a dead vertex are dead).
    """
    n_rows = packed.shape[0]
    out = np.empty((n_rows, packed_width(size * r)), dtype=np.uint8)
    for start in range(0, n_rows, REPLICATE_BLOCK):
        rows = slice(start, min(start + REPLICATE_BLOCK, n_rows))
        bits = np.unpackbits(packed[rows], axis=1, count=size)
        out[rows] = np.packbits(np.repeat(bits, r, axis=1), axis=1)
    return out


def sample_next_generation(
    parents: GenerationSignals,
    ch: ChannelParams,
    seed: SeedSpec,
    r: int,
    vertex_budget: int | None = None,
) -> GenerationSignals:
    """One broadcast step: each parent spawns ``r`` children, each child
    keeping the parent's sign with probability ``1 - epsilon`` independently
    (child = parent XOR flip)."""
    if r < 1:
        raise ValueError(f"branching rate must be >= 1, got {r}")
    child_size = parents.size * r
    check_vertices(child_size, vertex_budget)
    child_level = parents.level + 1

    out = repeat_packed(parents.packed, parents.size, r)
    for block, rows_slice, rows in replicate_blocks(parents.n_replicates):
        gen = seed.generator("flips", level=child_level, block=block)
        flips = bernoulli_bits(gen, ch.epsilon, REPLICATE_BLOCK, child_size)
        out[rows_slice] ^= flips[:rows]
    return GenerationSignals(
        level=child_level,
        size=child_size,
        n_replicates=parents.n_replicates,
        packed=out,
    )
