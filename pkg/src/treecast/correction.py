"""In-flight correction transforms applied to broadcast generations.

Six scheme variants act on a generation's blocks:

* ``Identity`` — no correction, the plain broadcast;
* ``BlockMajorityEveryStep{M}`` — from the first level holding at least one
  full block onward, every level is cut into consecutive ``M``-blocks and
  each block is overwritten by its majority sign (the first corrected level
  forms a single whole-level block 0);
* ``WithinDescentMajority{k}`` — every ``k`` levels, each block of the
  ``r**k`` descendants of one ancestor is overwritten by its majority sign;
* ``FractionIdentification{k}`` — same blocks, overwritten by the value of
  one uniformly chosen member;
* ``MinorityRemovalEveryStep{M}`` / ``WithinDescentMinorityRemoval{k}`` —
  instead of overwriting, the members not matching the block's majority are
  removed: they keep no descendants and leave all statistics.  Survivors of
  a block all share one sign and number at least half the block's members.

Exact ties are resolved by an independent fair coin per block ("fair-coin"
tie rule); the coins are drawn for every block on every application, tied or
not, from a dedicated stream purpose, so trajectories with and without ties
consume identical stream positions and stay comparable across schemes.

Minority removal is represented on the full regular tree with a packed
alive-mask per level: removed vertices keep broadcasting bits, but they are
masked out of every statistic and their descendants are born dead.  The law
of the alive portion is exactly the random-tree process the removal schemes
define, and the representation keeps every kernel rectangular.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .broadcast import (
    GenerationSignals,
    majority_statistic,
    packed_width,
    popcount_rows,
    repeat_packed,
    sample_next_generation,
    sample_root,
)
from .channel import ChannelParams
from .rng import REPLICATE_BLOCK, SeedSpec, bernoulli_bits, replicate_blocks
from .trees import (
    BlockPartition,
    DescentBlockPartition,
    Partition,
    RegularTreeSpec,
)

__all__ = [
    "CorrectedGeneration",
    "CorrectionScheme",
    "LevelRecord",
    "TrajectoryResult",
    "apply_block_majority",
    "apply_fraction_identification",
    "apply_minority_removal",
    "renormalize",
    "run_corrected_trajectory",
]

_M_VARIANTS = frozenset({"BlockMajorityEveryStep", "MinorityRemovalEveryStep"})
_K_VARIANTS = frozenset(
    {"WithinDescentMajority", "FractionIdentification", "WithinDescentMinorityRemoval"}
)
_REMOVAL_VARIANTS = frozenset(
    {"MinorityRemovalEveryStep", "WithinDescentMinorityRemoval"}
)
_VARIANTS = frozenset({"Identity"}) | _M_VARIANTS | _K_VARIANTS


@dataclass(frozen=True)
class CorrectionScheme:
    """A correction variant plus its block size ``M`` or period ``k``."""

    variant: str
    M: int | None = None
    k: int | None = None
    tie_rule: str = "fair-coin"

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(
                f"unknown scheme variant {self.variant!r}; expected one of "
                f"{sorted(_VARIANTS)}"
            )
        if self.tie_rule != "fair-coin":
            raise ValueError(f"only the fair-coin tie rule is supported, got {self.tie_rule!r}")
        if self.variant in _M_VARIANTS:
            if self.M is None or self.M < 1:
                raise ValueError(f"{self.variant} needs a block size M >= 1, got {self.M}")
            if self.k is not None:
                raise ValueError(f"{self.variant} takes M, not k")
        elif self.variant in _K_VARIANTS:
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.variant} needs a period k >= 1, got {self.k}")
            if self.M is not None:
                raise ValueError(f"{self.variant} takes k, not M")
        elif self.M is not None or self.k is not None:
            raise ValueError("Identity takes neither M nor k")

    @classmethod
    def identity(cls) -> "CorrectionScheme":
        return cls("Identity")

    @classmethod
    def block_majority_every_step(cls, M: int) -> "CorrectionScheme":
        return cls("BlockMajorityEveryStep", M=M)

    @classmethod
    def within_descent_majority(cls, k: int) -> "CorrectionScheme":
        return cls("WithinDescentMajority", k=k)

    @classmethod
    def fraction_identification(cls, k: int) -> "CorrectionScheme":
        return cls("FractionIdentification", k=k)

    @classmethod
    def minority_removal_every_step(cls, M: int) -> "CorrectionScheme":
        return cls("MinorityRemovalEveryStep", M=M)

    @classmethod
    def within_descent_minority_removal(cls, k: int) -> "CorrectionScheme":
        return cls("WithinDescentMinorityRemoval", k=k)

    @classmethod
    def parse(cls, text: str) -> "CorrectionScheme":
        """Parse a descriptor like ``"WithinDescentMajority{k=2}"``."""
        text = text.strip()
        if "{" not in text:
            return cls(text)
        if not text.endswith("}"):
            raise ValueError(f"malformed scheme descriptor {text!r}")
        variant, _, arg = text[:-1].partition("{")
        name, _, value = arg.partition("=")
        name = name.strip()
        if name not in ("M", "k"):
            raise ValueError(f"scheme parameter must be M or k, got {name!r}")
        return cls(variant.strip(), **{name: int(value)})

    @property
    def removes_minority(self) -> bool:
        return self.variant in _REMOVAL_VARIANTS

    @property
    def block_based(self) -> bool:
        return self.variant in _M_VARIANTS

    @property
    def descent_based(self) -> bool:
        return self.variant in _K_VARIANTS

    def descriptor(self) -> str:
        if self.variant in _M_VARIANTS:
            return f"{self.variant}{{M={self.M}}}"
        if self.variant in _K_VARIANTS:
            return f"{self.variant}{{k={self.k}}}"
        return self.variant

    def start_level(self, r: int) -> int:
        """First level the scheme touches: for block schemes the largest
        level whose whole generation fits in one block (block 0); for
        descent schemes the first correction level ``k``; 0 for Identity."""
        if self.variant in _M_VARIANTS:
            level = 0
            while r ** (level + 1) <= self.M:
                level += 1
            return level
        if self.variant in _K_VARIANTS:
            return self.k
        return 0

    def correction_levels(self, r: int, depth: int) -> tuple[int, ...]:
        """All levels at which the scheme corrects, within ``0..depth``."""
        if self.variant == "Identity":
            return ()
        if self.variant in _M_VARIANTS:
            return tuple(range(self.start_level(r), depth + 1))
        return tuple(range(self.k, depth + 1, self.k))

    def partition_for(self, level: int, r: int) -> Partition:
        """The block partition this scheme uses at a correction level."""
        if self.variant == "Identity":
            raise ValueError("Identity has no partitions")
        if self.variant in _M_VARIANTS:
            size = r**level
            start = self.start_level(r)
            if level < start:
                raise ValueError(f"level {level} is below the first block level {start}")
            block = size if level == start else self.M
            return BlockPartition(level=level, level_size=size, block_size=block)
        if level % self.k != 0 or level == 0:
            raise ValueError(f"level {level} is not a correction level for period {self.k}")
        return DescentBlockPartition(level=level, k=self.k, r=r)

    def exact_counterpart_exists(self, r: int) -> bool:
        """Whether the exact engine has a closed chain for this scheme."""
        if self.variant in ("Identity", "WithinDescentMajority", "FractionIdentification"):
            return True
        if self.variant == "BlockMajorityEveryStep":
            return r ** self.start_level(r) == self.M
        return False


@dataclass(frozen=True)
class CorrectedGeneration:
    """A generation after one correction: corrected signals, the partition,
    one value per block, and (for removal schemes) survivor masks."""

    signals: GenerationSignals
    partition: Partition
    applied: str
    block_signals: GenerationSignals
    excluded: range
    alive: np.ndarray | None = None
    block_alive: np.ndarray | None = None


def _check_partition(g: GenerationSignals, part: Partition) -> None:
    if part.level != g.level or part.level_size != g.size:
        raise ValueError(
            f"partition (level {part.level}, size {part.level_size}) does not "
            f"match generation (level {g.level}, size {g.size})"
        )


def _tie_bits(seed: SeedSpec, level: int, block: int, n_blocks: int) -> np.ndarray:
    """Fair tie-break coins, one per (replicate, block), unpacked 0/1."""
    gen = seed.generator("tie", level=level, block=block)
    packed = bernoulli_bits(gen, 0.5, REPLICATE_BLOCK, n_blocks)
    return np.unpackbits(packed, axis=1, count=n_blocks)


def apply_block_majority(
    g: GenerationSignals, part: Partition, seed: SeedSpec
) -> CorrectedGeneration:
    """Overwrite every block with its majority sign (fair coin on ties).

    Leftover indices past the last full block pass through unchanged and are
    flagged excluded.
    """
    _check_partition(g, part)
    B, nb, covered = part.block_size, part.n_blocks, part.covered
    out = g.packed.copy()
    block_packed = np.empty((g.n_replicates, packed_width(nb)), dtype=np.uint8)
    for block, rows_slice, rows in replicate_blocks(g.n_replicates):
        coins = _tie_bits(seed, g.level, block, nb)[:rows]
        bits = np.unpackbits(g.packed[rows_slice], axis=1, count=g.size)
        counts = bits[:, :covered].reshape(rows, nb, B).sum(axis=2, dtype=np.int32)
        majority = np.where(
            2 * counts > B, 1, np.where(2 * counts < B, 0, coins)
        ).astype(np.uint8)
        bits[:, :covered] = np.repeat(majority, B, axis=1)
        out[rows_slice] = np.packbits(bits, axis=1)
        block_packed[rows_slice] = np.packbits(majority, axis=1)
    return CorrectedGeneration(
        signals=GenerationSignals(g.level, g.size, g.n_replicates, out),
        partition=part,
        applied=f"block-majority B={B}",
        block_signals=GenerationSignals(g.level, nb, g.n_replicates, block_packed),
        excluded=part.leftover(),
    )


def apply_fraction_identification(
    g: GenerationSignals, part: Partition, seed: SeedSpec
) -> CorrectedGeneration:
    """Overwrite every block with the value of one uniformly chosen member."""
    _check_partition(g, part)
    B, nb, covered = part.block_size, part.n_blocks, part.covered
    out = g.packed.copy()
    block_packed = np.empty((g.n_replicates, packed_width(nb)), dtype=np.uint8)
    for block, rows_slice, rows in replicate_blocks(g.n_replicates):
        gen = seed.generator("pick", level=g.level, block=block)
        member = gen.integers(0, B, size=(REPLICATE_BLOCK, nb))[:rows]
        bits = np.unpackbits(g.packed[rows_slice], axis=1, count=g.size)
        grouped = bits[:, :covered].reshape(rows, nb, B)
        picked = np.take_along_axis(grouped, member[:, :, None], axis=2)[:, :, 0]
        picked = picked.astype(np.uint8)
        bits[:, :covered] = np.repeat(picked, B, axis=1)
        out[rows_slice] = np.packbits(bits, axis=1)
        block_packed[rows_slice] = np.packbits(picked, axis=1)
    return CorrectedGeneration(
        signals=GenerationSignals(g.level, g.size, g.n_replicates, out),
        partition=part,
        applied=f"fraction-identification B={B}",
        block_signals=GenerationSignals(g.level, nb, g.n_replicates, block_packed),
        excluded=part.leftover(),
    )


def apply_minority_removal(
    g: GenerationSignals,
    part: Partition,
    seed: SeedSpec,
    alive: np.ndarray | None = None,
) -> CorrectedGeneration:
    """Remove each block's minority members: survivors keep their signals,
    minority members die (no descendants, no further statistics).

    The majority is taken over the block's *alive* members; on an exact tie
    a fair coin picks which sign survives, so at least half the alive members
    always survive.  Blocks with no alive member stay dead.  Leftover indices
    keep their incoming alive state untouched.
    """
    _check_partition(g, part)
    B, nb, covered = part.block_size, part.n_blocks, part.covered
    width = packed_width(g.size)
    if alive is None:
        alive = np.full((g.n_replicates, width), 0xFF, dtype=np.uint8)
        tail = g.size % 8
        if tail:
            alive[:, -1] = (0xFF << (8 - tail)) & 0xFF
    elif alive.shape != g.packed.shape:
        raise ValueError(
            f"alive mask shape {alive.shape} does not match signals {g.packed.shape}"
        )

    new_alive = alive.copy()
    block_packed = np.empty((g.n_replicates, packed_width(nb)), dtype=np.uint8)
    block_alive = np.empty_like(block_packed)
    for block, rows_slice, rows in replicate_blocks(g.n_replicates):
        coins = _tie_bits(seed, g.level, block, nb)[:rows]
        bits = np.unpackbits(g.packed[rows_slice], axis=1, count=g.size)
        alive_bits = np.unpackbits(alive[rows_slice], axis=1, count=g.size)
        grouped_bits = bits[:, :covered].reshape(rows, nb, B)
        grouped_alive = alive_bits[:, :covered].reshape(rows, nb, B)
        plus = (grouped_bits & grouped_alive).sum(axis=2, dtype=np.int32)
        total = grouped_alive.sum(axis=2, dtype=np.int32)
        chosen = np.where(
            2 * plus > total, 1, np.where(2 * plus < total, 0, coins)
        ).astype(np.uint8)
        survivors = grouped_alive & (grouped_bits == chosen[:, :, None])
        alive_bits[:, :covered] = survivors.reshape(rows, covered)
        new_alive[rows_slice] = np.packbits(alive_bits, axis=1)
        block_packed[rows_slice] = np.packbits(chosen, axis=1)
        block_alive[rows_slice] = np.packbits((total > 0).astype(np.uint8), axis=1)
    return CorrectedGeneration(
        signals=g,
        partition=part,
        applied=f"minority-removal B={B}",
        block_signals=GenerationSignals(g.level, nb, g.n_replicates, block_packed),
        excluded=part.leftover(),
        alive=new_alive,
        block_alive=block_alive,
    )


def renormalize(cg: CorrectedGeneration) -> GenerationSignals:
    """Project a corrected generation to one value per block.

    Verifies the defining invariant first — every block's (surviving)
    members share the block value — and raises if it fails, since a
    violation signals a scheme-ordering bug.
    """
    g = cg.signals
    part = cg.partition
    B, nb, covered = part.block_size, part.n_blocks, part.covered
    for block, rows_slice, rows in replicate_blocks(g.n_replicates):
        bits = np.unpackbits(g.packed[rows_slice], axis=1, count=g.size)
        grouped = bits[:, :covered].reshape(rows, nb, B)
        values = np.unpackbits(
            cg.block_signals.packed[rows_slice], axis=1, count=nb
        )
        if cg.alive is None:
            same = grouped == values[:, :, None]
            mask = np.ones_like(same)
        else:
            alive_bits = np.unpackbits(cg.alive[rows_slice], axis=1, count=g.size)
            grouped_alive = alive_bits[:, :covered].reshape(rows, nb, B)
            same = grouped == values[:, :, None]
            mask = grouped_alive.astype(bool)
        if not (same | ~mask).all():
            raise ValueError(
                f"generation at level {g.level} is not constant on blocks; "
                "was a correction skipped?"
            )
    return cg.block_signals


@dataclass(frozen=True)
class LevelRecord:
    """Per-replicate statistics recorded at one level of a trajectory."""

    level: int
    statistic: np.ndarray
    alive_count: np.ndarray | None = None
    renormalized_statistic: np.ndarray | None = None
    n_blocks: int | None = None
    alive_block_count: np.ndarray | None = None
    excluded_count: int = 0


@dataclass(frozen=True)
class TrajectoryResult:
    """All recorded levels of one corrected-broadcast run."""

    scheme: CorrectionScheme
    channel: ChannelParams
    r: int
    depth: int
    n_replicates: int
    pinned_root: int | None
    pinned_renormalized_root: bool
    records: tuple[LevelRecord, ...]

    def record_at(self, level: int) -> LevelRecord:
        for rec in self.records:
            if rec.level == level:
                return rec
        raise KeyError(f"level {level} was not recorded")


def _constant_signals(level: int, size: int, n_replicates: int) -> GenerationSignals:
    """All-(+1) signals (used to pin the renormalized root)."""
    packed = np.full((n_replicates, packed_width(size)), 0xFF, dtype=np.uint8)
    tail = size % 8
    if tail:
        packed[:, -1] = (0xFF << (8 - tail)) & 0xFF
    return GenerationSignals(level=level, size=size, n_replicates=n_replicates, packed=packed)


def _apply_scheme(
    scheme: CorrectionScheme,
    g: GenerationSignals,
    part: Partition,
    seed: SeedSpec,
    alive: np.ndarray | None,
) -> CorrectedGeneration:
    if scheme.variant in ("BlockMajorityEveryStep", "WithinDescentMajority"):
        return apply_block_majority(g, part, seed)
    if scheme.variant == "FractionIdentification":
        return apply_fraction_identification(g, part, seed)
    if scheme.removes_minority:
        return apply_minority_removal(g, part, seed, alive)
    raise ValueError(f"scheme {scheme.variant} applies no correction")


def _make_record(
    level: int,
    g: GenerationSignals,
    alive: np.ndarray | None,
    cg: CorrectedGeneration | None,
) -> LevelRecord:
    statistic = majority_statistic(g, alive)
    alive_count = popcount_rows(alive) if alive is not None else None
    if cg is None:
        return LevelRecord(level=level, statistic=statistic, alive_count=alive_count)
    renorm = majority_statistic(cg.block_signals, cg.block_alive)
    blocks_alive = (
        popcount_rows(cg.block_alive) if cg.block_alive is not None else None
    )
    return LevelRecord(
        level=level,
        statistic=statistic,
        alive_count=alive_count,
        renormalized_statistic=renorm,
        n_blocks=cg.partition.n_blocks,
        alive_block_count=blocks_alive,
        excluded_count=len(cg.excluded),
    )


def run_corrected_trajectory(
    tree: RegularTreeSpec,
    scheme: CorrectionScheme,
    ch: ChannelParams,
    seed: SeedSpec,
    n_replicates: int,
    pin_root: int | None = +1,
    pin_renormalized_root: bool = False,
    record_levels: Sequence[int] | None = None,
    vertex_budget: int | None = None,
) -> TrajectoryResult:
    """Run the broadcast with corrections interleaved at the scheme's levels.

    The root is pinned to ``pin_root`` (or left a fair sign when None).  With
    ``pin_renormalized_root`` — block schemes only — the run instead starts
    at the scheme's block-0 level with the whole generation set to +1,
    measuring advantages relative to the renormalized root rather than the
    true one.

    ``record_levels`` selects the levels whose statistics are kept (default:
    all).  At correction levels the record carries both the raw signed sum
    and the renormalized one-vote-per-block sum, taken after correction.
    """
    r, depth = tree.r, tree.depth
    budget = tree.vertex_budget if vertex_budget is None else vertex_budget
    correction_at = set(scheme.correction_levels(r, depth))
    recorded = (
        set(range(depth + 1)) if record_levels is None else set(record_levels)
    )
    if recorded and (min(recorded) < 0 or max(recorded) > depth):
        raise ValueError(f"record levels must lie in 0..{depth}, got {sorted(recorded)}")

    if pin_renormalized_root:
        if not scheme.block_based:
            raise ValueError(
                "pin_renormalized_root is only meaningful for block schemes"
            )
        start = scheme.start_level(r)
        g = _constant_signals(start, r**start, n_replicates)
        correction_at.discard(start)
    else:
        start = 0
        g = sample_root(seed, n_replicates, pin=pin_root)
    alive: np.ndarray | None = None

    records: list[LevelRecord] = []
    if start in recorded:
        if pin_renormalized_root:
            ones = np.ones(n_replicates, dtype=np.int64)
            records.append(
                LevelRecord(
                    level=start,
                    statistic=majority_statistic(g),
                    renormalized_statistic=ones,
                    n_blocks=1,
                )
            )
        else:
            records.append(_make_record(start, g, alive, None))

    for level in range(start + 1, depth + 1):
        g = sample_next_generation(g, ch, seed, r, budget)
        if alive is not None:
            alive = repeat_packed(alive, g.size // r, r)
        cg = None
        if level in correction_at:
            part = scheme.partition_for(level, r)
            cg = _apply_scheme(scheme, g, part, seed, alive)
            g = cg.signals
            if scheme.removes_minority:
                alive = cg.alive
        if level in recorded:
            records.append(_make_record(level, g, alive, cg))

    return TrajectoryResult(
        scheme=scheme,
        channel=ch,
        r=r,
        depth=depth,
        n_replicates=n_replicates,
        pinned_root=None if pin_renormalized_root else pin_root,
        pinned_renormalized_root=pin_renormalized_root,
        records=tuple(records),
    )
