"""Index arithmetic and partition invariants on regular trees."""

import pytest
from hypothesis import given, strategies as st

from treecast import BudgetError, RegularTreeSpec
from treecast.trees import (
    Vertex,
    children_range,
    descent_partition,
    parent_of,
    partition_consecutive,
)

SMALL_TREE = RegularTreeSpec(r=3, depth=4)


def test_level_sizes_are_powers_of_r():
    assert [SMALL_TREE.level_size(n) for n in range(5)] == [1, 3, 9, 27, 81]
    with pytest.raises(ValueError):
        SMALL_TREE.level_size(5)


def test_vertex_validation():
    with pytest.raises(ValueError):
        Vertex(level=-1, index=1)
    with pytest.raises(ValueError):
        Vertex(level=2, index=0)  # indices are 1-based
    assert SMALL_TREE.contains(Vertex(4, 81))
    assert not SMALL_TREE.contains(Vertex(4, 82))
    assert not SMALL_TREE.contains(Vertex(5, 1))


def test_root_has_no_parent():
    with pytest.raises(ValueError):
        parent_of(Vertex(0, 1), SMALL_TREE)


@given(
    r=st.integers(min_value=2, max_value=5),
    level=st.integers(min_value=0, max_value=4),
    data=st.data(),
)
def test_parent_child_round_trip(r, level, data):
    spec = RegularTreeSpec(r=r, depth=level + 1)
    index = data.draw(st.integers(min_value=1, max_value=r**level))
    v = Vertex(level, index)
    kids = children_range(v, spec)
    assert len(kids) == r
    for s in kids:
        assert parent_of(Vertex(level + 1, s), spec) == v


def test_children_of_distinct_vertices_are_disjoint():
    seen = set()
    for index in range(1, SMALL_TREE.level_size(2) + 1):
        kids = set(children_range(Vertex(2, index), SMALL_TREE))
        assert not kids & seen
        seen |= kids
    assert seen == set(range(1, SMALL_TREE.level_size(3) + 1))


@given(
    level_size=st.integers(min_value=0, max_value=200),
    block_size=st.integers(min_value=1, max_value=50),
)
def test_consecutive_partition_covers_level_once(level_size, block_size):
    part = partition_consecutive(level_size, block_size)
    covered = [s for block in part.blocks() for s in block]
    assert len(covered) == part.covered == part.n_blocks * block_size
    assert covered + list(part.leftover()) == list(range(1, level_size + 1))
    for block in part.blocks():
        assert len(block) == block_size
    assert len(part.leftover()) == level_size % block_size


def test_descent_partition_blocks_are_descendant_sets():
    spec = RegularTreeSpec(r=2, depth=6)
    part = descent_partition(level=4, k=2, spec=spec)
    assert part.block_size == 4
    assert part.n_blocks == 4
    assert len(part.leftover()) == 0
    for b, block in enumerate(part.blocks()):
        ancestor = part.ancestor_of_block(b)
        assert ancestor.level == 2
        for s in block:
            v = Vertex(4, s)
            assert parent_of(parent_of(v, spec), spec) == ancestor


def test_descent_partition_rejects_misaligned_levels():
    spec = RegularTreeSpec(r=2, depth=6)
    with pytest.raises(ValueError):
        descent_partition(level=5, k=2, spec=spec)
    with pytest.raises(ValueError):
        descent_partition(level=8, k=2, spec=spec)


def test_vertex_budget_guard():
    with pytest.raises(BudgetError):
        RegularTreeSpec(r=2, depth=30)  # 2**30 vertices at the last level
    assert RegularTreeSpec(r=2, depth=30, vertex_budget=2**31).depth == 30
