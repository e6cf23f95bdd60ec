"""Monte Carlo estimators against the exact engine and interval invariants."""

import math

import numpy as np
import pytest

from treecast import (
    ChannelParams,
    CorrectionScheme,
    DeltaEstimate,
    McConfig,
    SeedSpec,
    block_error_rate,
    delta_confidence_interval,
    delta_exact,
    mc_critical_bracket,
    mc_delta,
    mc_effective_error,
    wilson_interval,
)
from treecast.estimators import JUDGE_INCONCLUSIVE

from conftest import GATE_LABELS

SEED = SeedSpec(master_seed=314159)
Z_99 = 2.5758293035489004  # two-sided 99% normal quantile


def test_wilson_interval_formula():
    lo, hi = wilson_interval(80, 100, ci_level=0.99)
    n, p_hat = 100.0, 0.8
    denom = 1 + Z_99**2 / n
    center = (p_hat + Z_99**2 / (2 * n)) / denom
    half = Z_99 * math.sqrt(p_hat * 0.2 / n + Z_99**2 / (4 * n * n)) / denom
    assert math.isclose(lo, center - half, rel_tol=1e-9)
    assert math.isclose(hi, center + half, rel_tol=1e-9)


def test_wilson_interval_boundaries():
    lo, hi = wilson_interval(0, 50)
    assert lo == 0.0 and hi < 0.2
    lo, hi = wilson_interval(50, 50)
    assert hi == 1.0 and lo > 0.8
    # Fractional success mass (tie weighting) is accepted.
    lo, hi = wilson_interval(10.5, 100)
    assert lo < 0.105 < hi
    with pytest.raises(ValueError):
        wilson_interval(-1, 10)
    with pytest.raises(ValueError):
        wilson_interval(11, 10)
    with pytest.raises(ValueError):
        wilson_interval(5, 10, ci_level=1.0)


def test_delta_interval_is_conservative():
    lo, hi = delta_confidence_interval(700, 100, 1000)
    assert lo <= 0.6 <= hi
    assert -1.0 <= lo < hi <= 1.0
    # Wider nominal level gives a wider interval.
    lo_hi_90 = delta_confidence_interval(700, 100, 1000, ci_level=0.90)
    assert lo_hi_90[0] >= lo and lo_hi_90[1] <= hi


def test_mc_config_validation():
    ch = ChannelParams(epsilon=0.2)
    with pytest.raises(ValueError):
        McConfig(
            r=2, depth=4, scheme=CorrectionScheme.identity(), channel=ch,
            seed=SEED, replicates=50,
        )
    with pytest.raises(ValueError):
        McConfig(
            r=2, depth=5, scheme=CorrectionScheme.within_descent_majority(2),
            channel=ch, seed=SEED, replicates=500,
        )
    with pytest.raises(ValueError):
        McConfig(
            r=2, depth=4, scheme=CorrectionScheme.identity(), channel=ch,
            seed=SEED, replicates=500, pin_renormalized_root=True,
        )
    with pytest.raises(ValueError):
        # Depth must exceed the block scheme's start level to pin there.
        McConfig(
            r=2, depth=2, scheme=CorrectionScheme.block_majority_every_step(4),
            channel=ch, seed=SEED, replicates=500, pin_renormalized_root=True,
        )


def test_delta_estimate_validation():
    with pytest.raises(ValueError):
        DeltaEstimate(
            n=2, delta_hat=0.5, ci=(0.6, 0.7), replicates=100,
            plus_count=75, minus_count=25,
        )
    with pytest.raises(ValueError):
        DeltaEstimate(
            n=2, delta_hat=1.5, ci=(0.0, 2.0), replicates=100,
            plus_count=100, minus_count=0,
        )


@pytest.mark.parametrize("idx", range(len(GATE_LABELS)), ids=GATE_LABELS)
def test_mc_matches_exact_engine(idx, gate_points):
    point = gate_points[idx]
    assert point.sigma > 0
    assert point.z < 3.0, (
        f"{point.label}: estimate {point.delta_hat:.4f} vs exact "
        f"{point.exact:.4f} is {point.z:.2f} sigma away"
    )


def test_mc_delta_deterministic():
    cfg = McConfig(
        r=2, depth=4, scheme=CorrectionScheme.identity(),
        channel=ChannelParams(epsilon=0.1), seed=SEED, replicates=500,
        record_levels=(4,),
    )
    a = mc_delta(cfg)[-1]
    b = mc_delta(cfg)[-1]
    assert (a.delta_hat, a.plus_count, a.minus_count) == (
        b.delta_hat, b.plus_count, b.minus_count
    )
    other = mc_delta(
        McConfig(
            r=2, depth=4, scheme=CorrectionScheme.identity(),
            channel=ChannelParams(epsilon=0.1),
            seed=SeedSpec(master_seed=271828), replicates=500,
            record_levels=(4,),
        )
    )[-1]
    assert (a.plus_count, a.minus_count) != (other.plus_count, other.minus_count)


def test_mc_delta_records_every_level_by_default():
    cfg = McConfig(
        r=2, depth=3, scheme=CorrectionScheme.identity(),
        channel=ChannelParams(epsilon=0.2), seed=SEED, replicates=200,
    )
    estimates = mc_delta(cfg)
    assert [est.n for est in estimates] == [0, 1, 2, 3]
    assert estimates[0].delta_hat == 1.0  # the pinned root itself
    assert all(est.ci[0] <= est.delta_hat <= est.ci[1] for est in estimates)


def test_minority_removal_estimates_are_renormalized():
    cfg = McConfig(
        r=3, depth=2, scheme=CorrectionScheme.within_descent_minority_removal(1),
        channel=ChannelParams(epsilon=0.3), seed=SEED, replicates=500,
        record_levels=(2,),
    )
    est = mc_delta(cfg)[-1]
    assert est.renormalized
    assert -1.0 <= est.delta_hat <= 1.0


def test_mc_effective_error_matches_exact_period():
    est = mc_effective_error(2, 0.2, k=1, replicates=20_000, seed=SEED)
    sigma = est.sigma
    assert abs(est.eps_hat - 0.2) < 4 * sigma
    est_m = mc_effective_error(2, 0.2, M=3, replicates=20_000, seed=SEED)
    assert abs(est_m.eps_hat - block_error_rate(3, 0.2)) < 4 * est_m.sigma
    assert est_m.ci[0] < est_m.eps_hat < est_m.ci[1]


def test_minority_flavor_matches_majority_in_law():
    maj = mc_effective_error(3, 0.25, k=1, replicates=20_000, seed=SEED)
    mino = mc_effective_error(3, 0.25, k=1, minority=True, replicates=20_000, seed=SEED)
    pooled = math.hypot(maj.sigma, mino.sigma)
    assert abs(maj.eps_hat - mino.eps_hat) < 4 * pooled


def test_mc_effective_error_validation():
    with pytest.raises(ValueError):
        mc_effective_error(2, 0.2, replicates=500, seed=SEED)
    with pytest.raises(ValueError):
        mc_effective_error(2, 0.2, k=1, M=3, replicates=500, seed=SEED)
    with pytest.raises(ValueError):
        mc_effective_error(2, 0.2, M=3, minority=True, replicates=500, seed=SEED)
    with pytest.raises(ValueError):
        mc_effective_error(2, 0.2, k=1, replicates=50, seed=SEED)


def test_critical_bracket_localizes_identity_threshold():
    # The identity scheme's threshold on the binary tree is 1/sqrt(2); at
    # depth 12 the advantage at the grid edges is far enough from the middle
    # value to be called with four-sigma confidence.
    grid = (0.62, 0.66, 0.70, 0.74, 0.78)
    bracket = mc_critical_bracket(
        CorrectionScheme.identity(), 2, 12, grid, 10_000, SEED,
        floor=delta_exact(12, 2, (1 - 0.70) / 2),
    )
    assert bracket.p_lo < 1 / math.sqrt(2) < bracket.p_hi
    assert bracket.p_lo in grid and bracket.p_hi in grid
    assert bracket.tolerance == pytest.approx(0.04)
    assert len(bracket.points) == 5
    judged = [pt for pt in bracket.points if pt.judgement != JUDGE_INCONCLUSIVE]
    assert judged


def test_critical_bracket_fallback_edges():
    # Every point reconstructing: the lower edge falls back to zero.
    bracket = mc_critical_bracket(
        CorrectionScheme.identity(), 2, 6,
        (0.86, 0.88, 0.90, 0.92, 0.94), 1_000, SEED, floor=0.05,
    )
    assert bracket.p_lo == 0.0
    assert bracket.p_hi == 0.86
    # Every point non-reconstructing: the upper edge falls back to one.
    bracket = mc_critical_bracket(
        CorrectionScheme.identity(), 2, 12,
        (0.52, 0.54, 0.56, 0.58, 0.60), 1_000, SEED, floor=0.9,
    )
    assert bracket.p_hi == 1.0
    assert bracket.p_lo == 0.60


def test_critical_bracket_all_inconclusive_raises():
    # A narrow grid whose true advantages all sit within a fraction of a
    # standard error of the floor cannot be judged at 100 replicates.
    with pytest.raises(RuntimeError):
        mc_critical_bracket(
            CorrectionScheme.identity(), 2, 4,
            (0.68, 0.69, 0.70, 0.71, 0.72), 100, SEED,
            floor=delta_exact(4, 2, 0.15),
        )


def test_critical_bracket_grid_validation():
    with pytest.raises(ValueError):
        mc_critical_bracket(
            CorrectionScheme.identity(), 2, 4, (0.6, 0.7), 500, SEED, floor=0.3
        )
    with pytest.raises(ValueError):
        mc_critical_bracket(
            CorrectionScheme.identity(), 2, 4,
            (0.6, 0.6, 0.7, 0.8, 0.9), 500, SEED, floor=0.3,
        )
