"""Bit-packed broadcast kernel: packing, statistics, and the one-step law."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecast import (
    BudgetError,
    ChannelParams,
    GenerationSignals,
    SeedSpec,
    majority_statistic,
    sample_next_generation,
    sample_root,
)
from treecast.broadcast import packed_width, popcount_rows, repeat_packed

SEED = SeedSpec(master_seed=20240901)


def test_packed_width():
    assert [packed_width(s) for s in (1, 8, 9, 16, 17)] == [1, 1, 2, 2, 3]


@given(
    signs=st.lists(st.sampled_from((-1, 1)), min_size=1, max_size=40),
    n_rows=st.integers(min_value=1, max_value=4),
)
def test_pack_round_trip(signs, n_rows):
    arr = np.tile(np.array(signs, dtype=np.int8), (n_rows, 1))
    g = GenerationSignals.from_signs(arr, level=2)
    assert g.size == len(signs)
    assert g.n_replicates == n_rows
    np.testing.assert_array_equal(g.to_signs(), arr)
    # Padding bits beyond `size` stay zero.
    assert not np.unpackbits(g.packed, axis=1)[:, g.size :].any()


def test_from_signs_rejects_non_signs():
    with pytest.raises(ValueError):
        GenerationSignals.from_signs(np.array([1, 0, -1]), level=0)


def test_packed_shape_validation():
    with pytest.raises(ValueError):
        GenerationSignals(
            level=0, size=9, n_replicates=2, packed=np.zeros((2, 1), dtype=np.uint8)
        )


def test_popcount_rows():
    packed = np.array([[0b10110000], [0b11111111], [0]], dtype=np.uint8)
    np.testing.assert_array_equal(popcount_rows(packed), [3, 8, 0])


def test_majority_statistic_counts_signs():
    g = GenerationSignals.from_signs(
        np.array([[1, 1, -1, -1, -1], [1, 1, 1, 1, 1]]), level=1
    )
    np.testing.assert_array_equal(majority_statistic(g), [-1, 5])


def test_majority_statistic_with_alive_mask():
    g = GenerationSignals.from_signs(np.array([[1, 1, -1, -1]]), level=1)
    alive = np.packbits(np.array([[1, 0, 1, 0]], dtype=np.uint8), axis=1)
    # Alive vertices are the first and third: signs +1 and -1, sum 0.
    np.testing.assert_array_equal(majority_statistic(g, alive), [0])
    with pytest.raises(ValueError):
        majority_statistic(g, alive[:, :0])


def test_repeat_packed_repeats_each_bit():
    packed = np.packbits(np.array([[1, 0, 1]], dtype=np.uint8), axis=1)
    out = repeat_packed(packed, size=3, r=3)
    bits = np.unpackbits(out, axis=1, count=9)
    np.testing.assert_array_equal(bits[0], [1, 1, 1, 0, 0, 0, 1, 1, 1])


def test_sample_root_pinning():
    plus = sample_root(SEED, 10, pin=+1)
    minus = sample_root(SEED, 10, pin=-1)
    assert (plus.to_signs() == 1).all()
    assert (minus.to_signs() == -1).all()
    with pytest.raises(ValueError):
        sample_root(SEED, 10, pin=0)


def test_sample_root_fair_when_unpinned():
    g = sample_root(SEED, 10_000, pin=None)
    mean = g.to_signs().mean()
    assert abs(mean) < 4 / np.sqrt(10_000)


def test_noiseless_step_copies_parent():
    parents = GenerationSignals.from_signs(np.array([[1, -1], [-1, -1]]), level=1)
    kids = sample_next_generation(parents, ChannelParams(epsilon=0.0), SEED, r=3)
    assert kids.level == 2
    assert kids.size == 6
    np.testing.assert_array_equal(
        kids.to_signs(), [[1, 1, 1, -1, -1, -1], [-1, -1, -1, -1, -1, -1]]
    )


def test_step_is_deterministic():
    parents = sample_root(SEED, 500, pin=+1)
    a = sample_next_generation(parents, ChannelParams(epsilon=0.2), SEED, r=2)
    b = sample_next_generation(parents, ChannelParams(epsilon=0.2), SEED, r=2)
    np.testing.assert_array_equal(a.packed, b.packed)


def test_spin_flip_symmetry_is_exact():
    # Flip errors are drawn independently of the parent values, so running the
    # same streams from the opposite root complements every signal bit.
    ch = ChannelParams(epsilon=0.3)
    g_plus = sample_root(SEED, 300, pin=+1)
    g_minus = sample_root(SEED, 300, pin=-1)
    for _ in range(4):
        g_plus = sample_next_generation(g_plus, ch, SEED, r=2)
        g_minus = sample_next_generation(g_minus, ch, SEED, r=2)
    np.testing.assert_array_equal(g_plus.to_signs(), -g_minus.to_signs())


def test_one_step_child_pair_law():
    # From a +1 root with eps=0.1, both children are +1 with probability 0.81.
    n = 10_000
    root = sample_root(SEED, n, pin=+1)
    kids = sample_next_generation(root, ChannelParams(epsilon=0.1), SEED, r=2)
    freq = (majority_statistic(kids) == 2).mean()
    sigma = np.sqrt(0.81 * 0.19 / n)
    assert abs(freq - 0.81) < 4 * sigma


@settings(max_examples=20)
@given(eps=st.floats(min_value=0.01, max_value=0.49), r=st.integers(2, 4))
def test_flip_frequency_matches_channel(eps, r):
    root = sample_root(SEED, 2_000, pin=+1)
    kids = sample_next_generation(root, ChannelParams(epsilon=eps), SEED, r=r)
    flips = (kids.to_signs() == -1).mean()
    sigma = np.sqrt(eps * (1 - eps) / (2_000 * r))
    assert abs(flips - eps) < 5 * sigma


def test_vertex_budget_enforced():
    parents = sample_root(SEED, 4, pin=+1)
    with pytest.raises(BudgetError):
        sample_next_generation(
            parents, ChannelParams(epsilon=0.1), SEED, r=3, vertex_budget=2
        )
