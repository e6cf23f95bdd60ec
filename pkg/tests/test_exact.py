"""Exact count-chain engine against brute-force enumeration oracles."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecast import (
    BudgetError,
    block_error_rate,
    block_scheme_delta,
    count_distribution,
    critical_point_k,
    delta_exact,
    effective_error_rate,
    fraction_error_rate,
    fraction_scheme_delta,
    ks_condition_value,
    level_sum_agreement,
    mean_level_sum,
    minimal_rescuing_block_size,
    renormalized_delta,
    t_statistic,
    t_statistic_direct,
)
from treecast.exact import delta_from_distribution

EPS_GRID = (0.05, 0.1, 0.2, 0.3, 0.45)

small_eps = st.floats(min_value=0.0, max_value=0.49)


def brute_force_counts(n, r, eps):
    """Level-n count distribution from a +1 root, by summing the probability
    of every flip pattern of the full depth-n tree."""
    probs = np.zeros(r**n + 1)

    def recurse(level, signs, weight):
        if level == n:
            probs[sum(1 for s in signs if s > 0)] += weight
            return
        size = len(signs) * r
        for flips in itertools.product((0, 1), repeat=size):
            w = weight
            child = []
            for j, flip in enumerate(flips):
                parent = signs[j // r]
                child.append(-parent if flip else parent)
                w *= eps if flip else 1.0 - eps
            recurse(level + 1, child, w)

    recurse(0, [1], 1.0)
    return probs


@pytest.mark.parametrize("r,n", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_count_chain_matches_enumeration(r, n, eps):
    oracle = brute_force_counts(n, r, eps)
    d = count_distribution(n, r, eps)
    np.testing.assert_allclose(d.probs(), oracle, atol=1e-12)


@pytest.mark.parametrize("eps", EPS_GRID)
@pytest.mark.parametrize("r,n", [(2, 6), (3, 4), (4, 3)])
def test_mean_level_sum_identity(r, n, eps):
    mean = mean_level_sum(count_distribution(n, r, eps))
    assert math.isclose(mean, ((1 - 2 * eps) * r) ** n, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=30)
@given(eps=small_eps, r=st.integers(2, 4), n=st.integers(0, 4))
def test_count_distribution_is_a_distribution(eps, r, n):
    probs = count_distribution(n, r, eps).probs()
    assert probs.shape == (r**n + 1,)
    assert (probs >= 0).all()
    assert math.isclose(probs.sum(), 1.0, rel_tol=1e-10)


def test_delta_boundaries():
    assert delta_exact(0, 2, 0.3) == 1.0
    assert delta_exact(5, 2, 0.0) == 1.0
    assert abs(delta_exact(5, 2, 0.5)) < 1e-12
    assert abs(delta_exact(4, 3, 0.4999) - 0.0) < 1e-2


@settings(max_examples=30)
@given(eps=small_eps, r=st.integers(2, 3), n=st.integers(0, 5))
def test_delta_in_unit_interval(eps, r, n):
    value = delta_exact(n, r, eps)
    assert -1e-12 <= value <= 1.0 + 1e-12


@pytest.mark.parametrize("r,n", [(2, 4), (3, 3)])
def test_delta_monotone_in_distortion(r, n):
    values = [delta_exact(n, r, eps) for eps in np.linspace(0.0, 0.5, 21)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_delta_from_distribution_nets_ties():
    # A two-point even level: counts {0, 1, 2} with a tie at 1.
    d = count_distribution(1, 2, 0.5)
    probs = d.probs()
    assert math.isclose(probs[1], 0.5, rel_tol=1e-12)
    assert abs(delta_from_distribution(d)) < 1e-12


def test_effective_error_rate_closed_forms():
    # r=2, one step: the tie coin makes the majority error equal eps itself.
    for eps in EPS_GRID:
        assert math.isclose(effective_error_rate(1, 2, eps), eps, rel_tol=1e-12)
    # r=3, one step: at least two of three children must flip.
    for eps in EPS_GRID:
        expected = 3 * eps**2 * (1 - eps) + eps**3
        assert math.isclose(effective_error_rate(1, 3, eps), expected, rel_tol=1e-11)


@pytest.mark.parametrize("r,k", [(2, 2), (3, 2), (2, 3)])
@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_effective_error_rate_matches_enumeration(r, k, eps):
    probs = brute_force_counts(k, r, eps)
    size = r**k
    counts = np.arange(size + 1)
    oracle = probs[counts < size / 2].sum() + 0.5 * probs[counts == size / 2].sum()
    assert math.isclose(effective_error_rate(k, r, eps), oracle, rel_tol=1e-11)


@settings(max_examples=50)
@given(eps=small_eps, k=st.integers(1, 10))
def test_fraction_error_rate_closed_form(eps, k):
    assert math.isclose(
        1.0 - 2.0 * fraction_error_rate(k, eps),
        (1.0 - 2.0 * eps) ** k,
        rel_tol=1e-12,
        abs_tol=1e-12,
    )


@pytest.mark.parametrize("r,k", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
@pytest.mark.parametrize("eps", [0.05, 0.2, 0.4])
def test_t_statistic_paths_agree(r, k, eps):
    assert math.isclose(
        t_statistic(k, r, eps), t_statistic_direct(k, r, eps), abs_tol=1e-12
    )


def test_t_statistic_sign():
    # The descent majority never loses to picking one member; it strictly
    # wins except in the single case k=1, r=2, where ties make them equal.
    assert abs(t_statistic(1, 2, 0.3)) < 1e-15
    for k, r in ((1, 3), (2, 2), (3, 2), (2, 3)):
        for eps in (0.1, 0.3, 0.45):
            assert t_statistic(k, r, eps) > 0.0


def test_block_error_rate_closed_forms():
    for eps in EPS_GRID:
        assert math.isclose(block_error_rate(1, eps), eps, rel_tol=1e-12)
        # M=2: one flip is a tie worth one half, two flips are an error.
        assert math.isclose(block_error_rate(2, eps), eps, rel_tol=1e-12)
    assert math.isclose(block_error_rate(3, 0.2), 0.104, rel_tol=1e-12)
    with pytest.raises(ValueError):
        block_error_rate(0, 0.2)


def test_minimal_rescuing_block_size_scan():
    m_star = minimal_rescuing_block_size(2, 0.4)
    assert m_star == 32
    assert (1 - 2 * block_error_rate(32, 0.4)) ** 2 * 2 > 1.0
    assert (1 - 2 * block_error_rate(16, 0.4)) ** 2 * 2 <= 1.0


def test_ks_condition_value_k1_r2():
    # One-step correction at r=2 keeps the channel, so the condition is
    # p**2 * 2 - 1, vanishing exactly at 1/sqrt(2).
    p = 1 / math.sqrt(2)
    assert abs(ks_condition_value(1, 2, p)) < 1e-12
    assert ks_condition_value(1, 2, 0.9) > 0
    assert ks_condition_value(1, 2, 0.5) < 0


def test_critical_point_bracket_is_a_sign_change():
    est = critical_point_k(2, 2, tol=1e-6)
    assert est.p_hi - est.p_lo <= 1e-6
    assert ks_condition_value(2, 2, est.p_lo) <= 0 <= ks_condition_value(2, 2, est.p_hi)


def test_critical_point_sequence_r2():
    points = [critical_point_k(k, 2, tol=1e-9).midpoint for k in range(1, 5)]
    assert abs(points[0] - 1 / math.sqrt(2)) < 1e-8
    assert all(a > b for a, b in zip(points, points[1:]))
    assert all(p >= 0.5 for p in points)
    assert all(p < 1 / math.sqrt(2) for p in points[1:])


def test_renormalized_delta_boundary():
    # Zero renormalized levels leave just the root-to-block channel.
    for k, r, eps in ((1, 2, 0.2), (2, 2, 0.1), (2, 3, 0.3)):
        expected = 1.0 - 2.0 * effective_error_rate(k, r, eps)
        assert math.isclose(renormalized_delta(k, 0, r, eps), expected, rel_tol=1e-12)
        with pytest.raises(ValueError):
            renormalized_delta(k, -1, r, eps)


@settings(max_examples=30)
@given(eps=small_eps, k=st.integers(1, 4))
def test_fraction_scheme_delta_closed_form_at_depth_zero(eps, k):
    assert math.isclose(
        fraction_scheme_delta(k, 0, 2, eps),
        (1.0 - 2.0 * eps) ** k,
        rel_tol=1e-12,
        abs_tol=1e-12,
    )


def test_block_scheme_delta_requires_power_blocks():
    with pytest.raises(ValueError):
        block_scheme_delta(3, 2, 2, 0.1)
    value = block_scheme_delta(2, 3, 2, 0.1)
    # M=r: block 0 is level 1, and the renormalized channel keeps eps.
    expected = (1 - 2 * effective_error_rate(1, 2, 0.1)) * delta_exact(3, 2, 0.1)
    assert math.isclose(value, expected, rel_tol=1e-12)


def test_level_sum_agreement_is_positive_and_complete():
    report = level_sum_agreement(4, 2, 0.3)
    values = report.all_values()
    # Two one-step conditionals, one entry per positive previous-level sum
    # (half of the 2**3 counts), and one entry per lag.
    assert len(values) == 2 + 2 ** 3 // 2 + 4
    assert all(v > 0 for v in values)
    assert all(-1 <= v <= 1 for v in values)


def test_level_sum_agreement_small_distortion_saturates():
    report = level_sum_agreement(2, 2, 0.01)
    assert report.previous_given_final_positive > 0.9
    assert report.final_given_previous_positive > 0.9


def test_support_budget_guard():
    with pytest.raises(BudgetError):
        count_distribution(17, 2, 0.1)  # support 2**17 + 1 > 65537
    # An explicit budget overrides the default in both directions: a tight
    # one rejects a level the default would allow, a matching one is inclusive.
    with pytest.raises(BudgetError):
        count_distribution(10, 2, 0.1, budget=100)
    assert count_distribution(5, 2, 0.1, budget=33).size == 32


def test_support_budget_env_override(monkeypatch):
    monkeypatch.setenv("TREECAST_BUDGET", "100")
    with pytest.raises(BudgetError):
        count_distribution(7, 2, 0.1)  # support 129 > 100
    # An explicit per-call budget wins over the environment.
    assert count_distribution(7, 2, 0.1, budget=200).size == 128
    monkeypatch.setenv("TREECAST_BUDGET", "not-a-number")
    with pytest.raises(ValueError):
        count_distribution(7, 2, 0.1)


def test_channel_domain_validation():
    with pytest.raises(ValueError):
        delta_exact(3, 1, 0.1)
    with pytest.raises(ValueError):
        delta_exact(3, 2, 0.6)
    with pytest.raises(ValueError):
        delta_exact(-1, 2, 0.1)
