"""Exact root reconstruction on explicit finite trees.

The count-chain engine handles regular trees through level-sum statistics;
this module is its companion for *arbitrary* small trees and the optimal
decision rule.  A tree is stored as an explicit child-adjacency table, and
the advantage of a reconstruction rule is computed exactly by dynamic
programming over every sign pattern of the observed vertices: one bottom-up
pass yields, for each pattern, the pair of conditional probabilities given a
+1 and a -1 root.  The maximum-likelihood advantage is the total-variation
distance between those two pattern laws; the majority advantage reuses the
same tables with the sign-count decision instead.

Observation sets default to the leaves but may be any set of non-root
vertices, so the advantage of watching a pruned subtree is the same call
with the pruned branches simply left out of the observation set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiniteTree",
    "ml_delta_exact",
    "majority_delta_enumerated",
    "loglikelihood_pair",
    "random_leafed_tree",
    "random_observation_pair",
]

# Hard cap on observed vertices for the pattern-table pass: 2^24 patterns is
# the largest table that is still a desk-scale array.
MAX_OBSERVED = 24


@dataclass(frozen=True)
class FiniteTree:
    """An explicit rooted tree on vertices ``0..n-1`` with root ``0``.

    ``children[v]`` lists the children of ``v``.  Every child id must exceed
    its parent's id, so index order is a valid top-down order and reversed
    index order a valid bottom-up order.
    """

    children: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.children)
        if n == 0:
            raise ValueError("tree needs at least a root vertex")
        seen = []
        for v, kids in enumerate(self.children):
            for c in kids:
                if not v < c < n:
                    raise ValueError(
                        f"child {c} of vertex {v} out of order or out of range"
                    )
                seen.append(c)
        if sorted(seen) != list(range(1, n)):
            raise ValueError("every non-root vertex must be exactly one child")

    @classmethod
    def regular(cls, r: int, depth: int) -> "FiniteTree":
        """The complete ``r``-ary tree of the given depth (``r >= 1``)."""
        if r < 1:
            raise ValueError(f"need r >= 1, got {r}")
        if depth < 0:
            raise ValueError(f"need depth >= 0, got {depth}")
        children: list[tuple[int, ...]] = []
        level_start, level_size = 0, 1
        for _ in range(depth):
            next_start = level_start + level_size
            for i in range(level_size):
                base = next_start + r * i
                children.append(tuple(range(base, base + r)))
            level_start, level_size = next_start, level_size * r
        children.extend(() for _ in range(level_size))
        return cls(children=tuple(children))

    @property
    def n_vertices(self) -> int:
        return len(self.children)

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v, kids in enumerate(self.children) if not kids)

    def depths(self) -> tuple[int, ...]:
        """Depth of every vertex (root has depth 0)."""
        depth = [0] * self.n_vertices
        for v, kids in enumerate(self.children):
            for c in kids:
                depth[c] = depth[v] + 1
        return tuple(depth)


def _validate_eps(eps: float) -> None:
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"distortion rate must lie in [0, 0.5], got {eps}")


def _resolve_observed(
    tree: FiniteTree, observed: tuple[int, ...] | None
) -> tuple[int, ...]:
    if observed is None:
        observed = tree.leaves
    observed = tuple(observed)
    if not observed:
        raise ValueError("need at least one observed vertex")
    if len(set(observed)) != len(observed):
        raise ValueError("observed vertices must be distinct")
    for v in observed:
        if not 0 < v < tree.n_vertices:
            raise ValueError(f"observed vertex {v} is the root or out of range")
    if len(observed) > MAX_OBSERVED:
        raise ValueError(
            f"tree too large: {len(observed)} observed vertices exceed the "
            f"exhaustive cap of {MAX_OBSERVED}"
        )
    return observed


def _pattern_likelihoods(
    tree: FiniteTree, eps: float, observed: tuple[int, ...]
) -> np.ndarray:
    """Joint law of the observed sign pattern given the root sign.

    Returns an array of shape ``(2, 2**len(observed))``: row 0 conditions on
    a +1 root, row 1 on a -1 root.  Pattern bits read 0 for +1 and 1 for -1;
    bit order is internal (root-side observations most significant) and only
    pattern-order-invariant quantities should be derived from it, except via
    :func:`_pattern_signs` which mirrors the same order.
    """
    obs = frozenset(observed)
    tables: dict[int, np.ndarray] = {}
    for v in reversed(range(tree.n_vertices)):
        tab = np.ones((2, 1))
        for c in tree.children[v]:
            child = tables.pop(c)
            through_edge = (1.0 - eps) * child + eps * child[::-1]
            tab = (tab[:, :, None] * through_edge[:, None, :]).reshape(2, -1)
        if v in obs:
            width = tab.shape[1]
            own = np.zeros((2, 2 * width))
            own[0, :width] = tab[0]
            own[1, width:] = tab[1]
            tab = own
        tables[v] = tab
    return tables[0]


def _pattern_signs(n_observed: int) -> np.ndarray:
    """Sign sum of every pattern, in the bit order of the likelihood table."""
    idx = np.arange(1 << n_observed, dtype=np.int64)
    minus = np.zeros(1 << n_observed, dtype=np.int64)
    for b in range(n_observed):
        minus += (idx >> b) & 1
    return n_observed - 2 * minus


def ml_delta_exact(
    tree: FiniteTree, eps: float, observed: tuple[int, ...] | None = None
) -> float:
    """Advantage of the optimal likelihood-comparison rule for the root sign.

    The rule declares +1 when the observed pattern is strictly more likely
    under a +1 root, -1 in the opposite case, and flips a fair coin on
    likelihood ties, so tied patterns contribute zero net advantage and the
    result is the total-variation distance between the two pattern laws.

    ``observed`` defaults to all leaves; any set of non-root vertices is
    accepted, so pruning branches of the tree is expressed by dropping their
    vertices from the observation set (the pruned law is the marginal law).
    """
    _validate_eps(eps)
    observed = _resolve_observed(tree, observed)
    lik = _pattern_likelihoods(tree, eps, observed)
    return float(0.5 * np.abs(lik[0] - lik[1]).sum())


def majority_delta_enumerated(
    tree: FiniteTree, eps: float, observed: tuple[int, ...] | None = None
) -> float:
    """Advantage of the plain sign-majority rule over the observed vertices.

    Computed from the same exact pattern law as :func:`ml_delta_exact`:
    ``P(sum > 0 | +1 root) - P(sum < 0 | +1 root)``, ties contributing zero
    net.  On a complete regular tree with all leaves observed this equals the
    count-chain value, which makes it an independent cross-check of that
    engine on small instances.
    """
    _validate_eps(eps)
    observed = _resolve_observed(tree, observed)
    lik = _pattern_likelihoods(tree, eps, observed)
    signs = _pattern_signs(len(observed))
    positive = signs > 0
    negative = signs < 0
    return float(lik[0][positive].sum() - lik[0][negative].sum())


def loglikelihood_pair(
    tree: FiniteTree, eps: float, signs: dict[int, int]
) -> tuple[float, float]:
    """Log-likelihood of one observed sign pattern under a +1 and a -1 root.

    ``signs`` maps observed vertex ids (non-root) to +-1.  The recursion
    carries per-vertex likelihood pairs in log space, so it scales to far
    deeper trees than the pattern-table pass.
    """
    _validate_eps(eps)
    if not signs:
        raise ValueError("need at least one observed vertex")
    for v, s in signs.items():
        if not 0 < v < tree.n_vertices:
            raise ValueError(f"observed vertex {v} is the root or out of range")
        if s not in (-1, 1):
            raise ValueError(f"sign for vertex {v} must be +-1, got {s}")
    with np.errstate(divide="ignore"):
        log_keep = np.log(1.0 - eps)
        log_flip = np.log(eps)
        log_pair = np.zeros((tree.n_vertices, 2))
        for v in reversed(range(tree.n_vertices)):
            for c in tree.children[v]:
                plus, minus = log_pair[c]
                log_pair[v, 0] += np.logaddexp(log_keep + plus, log_flip + minus)
                log_pair[v, 1] += np.logaddexp(log_flip + plus, log_keep + minus)
            s = signs.get(v)
            if s is not None:
                blocked = 0 if s == -1 else 1
                log_pair[v, blocked] = -np.inf
    return float(log_pair[0, 0]), float(log_pair[0, 1])


def random_leafed_tree(
    rng: np.random.Generator,
    depth: int,
    max_leaves: int,
    branching: tuple[int, ...] = (1, 2, 3),
) -> FiniteTree:
    """A random tree in which every leaf sits at the same depth.

    Each vertex above the bottom level draws its child count from
    ``branching``, clamped so the level (and hence the leaf set) never
    exceeds ``max_leaves``.
    """
    if depth < 1:
        raise ValueError(f"need depth >= 1, got {depth}")
    if max_leaves < 1:
        raise ValueError(f"need max_leaves >= 1, got {max_leaves}")
    if min(branching) < 1:
        raise ValueError("branching choices must be >= 1")
    children: list[list[int]] = [[]]
    frontier = [0]
    for _ in range(depth):
        next_frontier: list[int] = []
        for i, v in enumerate(frontier):
            still_waiting = len(frontier) - i - 1
            room = max_leaves - len(next_frontier) - still_waiting
            count = min(int(rng.choice(branching)), room)
            for _ in range(max(count, 1)):
                child = len(children)
                children.append([])
                children[v].append(child)
                next_frontier.append(child)
        frontier = next_frontier
    return FiniteTree(children=tuple(tuple(kids) for kids in children))


def random_observation_pair(
    rng: np.random.Generator,
    depth: int,
    max_leaves: int = 12,
    branching: tuple[int, ...] = (1, 2, 3),
) -> tuple[FiniteTree, tuple[int, ...]]:
    """A random tree plus a proper nonempty subset of its leaves.

    The subset is exactly the bottom level of a pruned-branch subtree that
    shares the root, so comparing the full and the subset observation tests
    that watching more of the tree never hurts the optimal rule.  Trees with
    a single leaf admit no proper subset, so the draw is retried (the
    branching choices make that a rare event).
    """
    for _ in range(64):
        tree = random_leafed_tree(rng, depth, max_leaves, branching)
        leaves = tree.leaves
        if len(leaves) >= 2:
            size = int(rng.integers(1, len(leaves)))
            kept = rng.choice(len(leaves), size=size, replace=False)
            subset = tuple(sorted(leaves[i] for i in kept))
            return tree, subset
    raise RuntimeError("could not draw a tree with at least two leaves")
