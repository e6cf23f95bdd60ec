"""Monte Carlo estimation of reconstruction advantage and error rates.

The exact engine covers schemes whose corrected process reduces to a plain
count chain.  Everything else — minority removal in particular, whose
surviving structure is a random tree — is estimated here from replicated
trajectories with deterministic seeding.  Estimates carry conservative
confidence intervals built from Wilson score intervals on the underlying
sign frequencies, and a bracket estimator localizes critical points from a
grid of channel strengths without ever claiming a sharp threshold: grid
points that cannot be called with a four-sigma margin widen the bracket
instead of being guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .broadcast import majority_statistic, sample_next_generation, sample_root
from .channel import ChannelParams
from .correction import CorrectionScheme, run_corrected_trajectory
from .exact import CriticalEstimate
from .rng import SeedSpec
from .trees import RegularTreeSpec

__all__ = [
    "DEFAULT_CI_LEVEL",
    "DECISION_SIGMAS",
    "McConfig",
    "DeltaEstimate",
    "ErrorRateEstimate",
    "BracketPoint",
    "McCriticalBracket",
    "wilson_interval",
    "delta_confidence_interval",
    "mc_delta",
    "mc_effective_error",
    "mc_critical_bracket",
]

DEFAULT_CI_LEVEL = 0.99

MIN_REPLICATES = 100

MIN_GRID_POINTS = 5

#: Number of standard errors a point estimate must clear the decision floor
#: by before a grid point is judged rather than reported inconclusive.
DECISION_SIGMAS = 4.0


def wilson_interval(
    successes: float, trials: int, ci_level: float = DEFAULT_CI_LEVEL
) -> tuple[float, float]:
    """Wilson score interval for a binomial frequency.

    ``successes`` may be fractional: tie outcomes enter several estimators
    with weight one half, and the score interval is well defined for any
    success mass in ``[0, trials]``.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if not 0.0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    if not 0.0 < ci_level < 1.0:
        raise ValueError(f"ci_level must lie in (0, 1), got {ci_level}")
    z = float(norm.ppf(0.5 + 0.5 * ci_level))
    n = float(trials)
    p_hat = successes / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def delta_confidence_interval(
    plus: float, minus: float, trials: int, ci_level: float = DEFAULT_CI_LEVEL
) -> tuple[float, float]:
    """Conservative interval for a frequency difference ``f(+) - f(-)``.

    Each frequency gets its own Wilson interval at level ``1 - (1-ci)/2``,
    and the difference interval is the worst-case combination, so joint
    coverage is at least ``ci_level`` without any independence assumption
    between the two sign counts.
    """
    each = 1.0 - 0.5 * (1.0 - ci_level)
    lo_p, hi_p = wilson_interval(plus, trials, each)
    lo_m, hi_m = wilson_interval(minus, trials, each)
    return max(lo_p - hi_m, -1.0), min(hi_p - lo_m, 1.0)


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo run: tree, scheme, channel, seeding, and sizes."""

    r: int
    depth: int
    scheme: CorrectionScheme
    channel: ChannelParams
    seed: SeedSpec
    replicates: int
    ci_level: float = DEFAULT_CI_LEVEL
    record_levels: tuple[int, ...] | None = None
    pin_renormalized_root: bool = False
    vertex_budget: int | None = None

    def __post_init__(self) -> None:
        if self.replicates < MIN_REPLICATES:
            raise ValueError(
                f"need at least {MIN_REPLICATES} replicates, got {self.replicates}"
            )
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"ci_level must lie in (0, 1), got {self.ci_level}")
        if self.scheme.descent_based and self.depth % self.scheme.k != 0:
            raise ValueError(
                f"depth {self.depth} must be a multiple of the descent period "
                f"{self.scheme.k}"
            )
        if self.pin_renormalized_root:
            if not self.scheme.block_based:
                raise ValueError(
                    "pin_renormalized_root is only meaningful for block schemes"
                )
            if self.depth <= self.scheme.start_level(self.r):
                raise ValueError(
                    "depth must exceed the scheme's start level to measure a "
                    "renormalized-root advantage"
                )

    def tree(self) -> RegularTreeSpec:
        return RegularTreeSpec(
            r=self.r, depth=self.depth, vertex_budget=self.vertex_budget
        )


@dataclass(frozen=True)
class DeltaEstimate:
    """Estimated reconstruction advantage at one level."""

    n: int
    delta_hat: float
    ci: tuple[float, float]
    replicates: int
    plus_count: int
    minus_count: int
    renormalized: bool = False

    def __post_init__(self) -> None:
        if not -1.0 <= self.delta_hat <= 1.0:
            raise ValueError(f"advantage {self.delta_hat} outside [-1, 1]")
        if not self.ci[0] <= self.delta_hat <= self.ci[1]:
            raise ValueError(
                f"interval {self.ci} does not contain the estimate {self.delta_hat}"
            )

    @property
    def sigma(self) -> float:
        """Standard error of the frequency difference (for separation gates)."""
        f_plus = self.plus_count / self.replicates
        f_minus = self.minus_count / self.replicates
        var = max(f_plus + f_minus - self.delta_hat**2, 0.0) / self.replicates
        return math.sqrt(var)


def _estimate_from_signs(
    level: int,
    stat: np.ndarray,
    replicates: int,
    ci_level: float,
    renormalized: bool,
) -> DeltaEstimate:
    plus = int((stat > 0).sum())
    minus = int((stat < 0).sum())
    delta_hat = (plus - minus) / replicates
    ci = delta_confidence_interval(plus, minus, replicates, ci_level)
    return DeltaEstimate(
        n=level,
        delta_hat=delta_hat,
        ci=ci,
        replicates=replicates,
        plus_count=plus,
        minus_count=minus,
        renormalized=renormalized,
    )


def mc_delta(cfg: McConfig) -> list[DeltaEstimate]:
    """Estimate the advantage at every recorded level of one corrected run.

    The root is pinned to +1 and each replicate contributes the sign of the
    level's decision statistic; the estimate is the frequency difference
    ``freq(> 0) - freq(< 0)`` (ties contribute zero net, matching the
    fair-coin convention).  The statistic is the signed sum over the level's
    vertices, with two exceptions: minority-removal schemes count one vote
    per surviving block at correction levels (the corrected process's
    vertices are the blocks), and renormalized-root runs read the one-vote
    statistic relative to the pinned block level.
    """
    traj = run_corrected_trajectory(
        cfg.tree(),
        cfg.scheme,
        cfg.channel,
        cfg.seed,
        cfg.replicates,
        pin_root=+1,
        pin_renormalized_root=cfg.pin_renormalized_root,
        record_levels=cfg.record_levels,
        vertex_budget=cfg.vertex_budget,
    )
    estimates = []
    for rec in traj.records:
        use_renormalized = rec.renormalized_statistic is not None and (
            cfg.pin_renormalized_root or cfg.scheme.removes_minority
        )
        stat = rec.renormalized_statistic if use_renormalized else rec.statistic
        estimates.append(
            _estimate_from_signs(
                rec.level, stat, cfg.replicates, cfg.ci_level, use_renormalized
            )
        )
    return estimates


@dataclass(frozen=True)
class ErrorRateEstimate:
    """Estimated one-period effective error rate (ties weighted one half)."""

    eps_hat: float
    ci: tuple[float, float]
    replicates: int
    error_mass: float
    tie_count: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps_hat <= 1.0:
            raise ValueError(f"error rate {self.eps_hat} outside [0, 1]")
        if not self.ci[0] <= self.eps_hat <= self.ci[1]:
            raise ValueError(
                f"interval {self.ci} does not contain the estimate {self.eps_hat}"
            )

    @property
    def sigma(self) -> float:
        var = max(self.eps_hat * (1.0 - self.eps_hat), 0.0) / self.replicates
        return math.sqrt(var)


def mc_effective_error(
    r: int,
    eps: float,
    *,
    k: int | None = None,
    M: int | None = None,
    minority: bool = False,
    replicates: int = 10_000,
    seed: SeedSpec | int = 0,
    ci_level: float = DEFAULT_CI_LEVEL,
    vertex_budget: int | None = None,
) -> ErrorRateEstimate:
    """Estimate the error rate of one correction period from a +1 root.

    Exactly one of ``k`` (descent majority over the ``r**k`` descendants
    after ``k`` generations) and ``M`` (majority over a block of ``M``
    independent copies of one broadcast step) selects the period shape.
    With ``minority=True`` (descent flavor only) the period instead applies
    minority removal and reads the surviving sign, which is the same sign
    event as the majority with the tie resolved by the scheme's coin.

    Majority ties contribute error mass one half; the interval is a Wilson
    score interval on the accumulated error mass.
    """
    if (k is None) == (M is None):
        raise ValueError("exactly one of k and M must be given")
    if minority and k is None:
        raise ValueError("minority flavor is defined for the descent period only")
    if replicates < MIN_REPLICATES:
        raise ValueError(
            f"need at least {MIN_REPLICATES} replicates, got {replicates}"
        )
    if isinstance(seed, int):
        seed = SeedSpec(master_seed=seed)
    ch = ChannelParams(epsilon=eps)

    if minority:
        scheme = CorrectionScheme.within_descent_minority_removal(k)
        traj = run_corrected_trajectory(
            RegularTreeSpec(r=r, depth=k, vertex_budget=vertex_budget),
            scheme,
            ch,
            seed,
            replicates,
            pin_root=+1,
            record_levels=(k,),
            vertex_budget=vertex_budget,
        )
        stat = traj.records[-1].renormalized_statistic
        if stat is None:  # pragma: no cover - level k is always a correction level
            raise RuntimeError("missing renormalized statistic at the period level")
    else:
        if k is not None:
            branching, steps = r, k
        else:
            branching, steps = M, 1
        if branching < 1 or steps < 1:
            raise ValueError("period parameters must be positive")
        g = sample_root(seed, replicates, pin=+1)
        for _ in range(steps):
            g = sample_next_generation(g, ch, seed, branching, vertex_budget)
        stat = majority_statistic(g)

    ties = int((stat == 0).sum())
    error_mass = float((stat < 0).sum()) + 0.5 * ties
    eps_hat = error_mass / replicates
    ci = wilson_interval(error_mass, replicates, ci_level)
    return ErrorRateEstimate(
        eps_hat=eps_hat,
        ci=ci,
        replicates=replicates,
        error_mass=error_mass,
        tie_count=ties,
    )


JUDGE_RECONSTRUCTING = "reconstructing"
JUDGE_NON_RECONSTRUCTING = "non-reconstructing"
JUDGE_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BracketPoint:
    """One grid point of a critical bracket run and its judgement."""

    p: float
    estimate: DeltaEstimate
    judgement: str


@dataclass(frozen=True)
class McCriticalBracket(CriticalEstimate):
    """A Monte Carlo critical bracket with its per-point evidence.

    Shares the exact engine's bracket fields, so code that only reads the
    bracket treats both flavors alike; ``tolerance`` records the largest
    grid spacing and ``k`` is 0 for block schemes (no descent period).
    """

    points: tuple[BracketPoint, ...] = ()


def _judge(est: DeltaEstimate, floor: float) -> str:
    margin = DECISION_SIGMAS * est.sigma
    if est.delta_hat > floor and est.delta_hat - floor >= margin:
        return JUDGE_RECONSTRUCTING
    if est.delta_hat < floor and floor - est.delta_hat >= margin:
        return JUDGE_NON_RECONSTRUCTING
    return JUDGE_INCONCLUSIVE


def mc_critical_bracket(
    scheme: CorrectionScheme,
    r: int,
    depth: int,
    p_grid: tuple[float, ...] | list[float],
    replicates: int,
    seed: SeedSpec | int,
    *,
    floor: float,
    ci_level: float = DEFAULT_CI_LEVEL,
    vertex_budget: int | None = None,
) -> McCriticalBracket:
    """Bracket a scheme's critical error-free rate from a grid of p values.

    Each grid point runs the full scheme to ``depth`` (deepest level only)
    and is judged reconstructing or non-reconstructing only when its
    advantage clears the configured ``floor`` by four standard errors;
    anything closer is inconclusive and widens the bracket rather than
    being guessed.  The bracket is [largest non-reconstructing p below the
    reconstruction region, smallest reconstructing p]; with no
    non-reconstructing point the lower edge falls back to 0 and with no
    reconstructing point the upper edge falls back to 1 (both trivially
    correct).  All grid points share the seed, so the comparison across p
    uses common random numbers.

    Raises ``RuntimeError`` when every grid point is inconclusive: the grid
    carries no bracketing information at this depth and replicate count.
    """
    grid = tuple(sorted(float(p) for p in p_grid))
    if len(grid) < MIN_GRID_POINTS:
        raise ValueError(
            f"need at least {MIN_GRID_POINTS} grid points, got {len(grid)}"
        )
    if len(set(grid)) != len(grid):
        raise ValueError("grid points must be distinct")
    if isinstance(seed, int):
        seed = SeedSpec(master_seed=seed)

    points: list[BracketPoint] = []
    for p in grid:
        cfg = McConfig(
            r=r,
            depth=depth,
            scheme=scheme,
            channel=ChannelParams.from_p(p),
            seed=seed,
            replicates=replicates,
            ci_level=ci_level,
            record_levels=(depth,),
            vertex_budget=vertex_budget,
        )
        est = mc_delta(cfg)[-1]
        points.append(BracketPoint(p=p, estimate=est, judgement=_judge(est, floor)))

    if all(pt.judgement == JUDGE_INCONCLUSIVE for pt in points):
        raise RuntimeError(
            "every grid point is inconclusive at this depth/replicate budget"
        )

    recon = [pt.p for pt in points if pt.judgement == JUDGE_RECONSTRUCTING]
    non_recon = [pt.p for pt in points if pt.judgement == JUDGE_NON_RECONSTRUCTING]
    p_hi = min(recon) if recon else 1.0
    below = [p for p in non_recon if p < p_hi]
    p_lo = max(below) if below else 0.0
    monotone = (max(non_recon) if non_recon else -math.inf) < (
        min(recon) if recon else math.inf
    )
    spacing = max(b - a for a, b in zip(grid, grid[1:]))
    return McCriticalBracket(
        k=scheme.k if scheme.descent_based else 0,
        r=r,
        p_lo=p_lo,
        p_hi=p_hi,
        decision_rule=(
            f"MC advantage of {scheme.descriptor()} at level {depth} vs floor "
            f"{floor:g} with {DECISION_SIGMAS:g} sigma separation"
        ),
        tolerance=spacing,
        objective_monotone=monotone,
        points=tuple(points),
    )
