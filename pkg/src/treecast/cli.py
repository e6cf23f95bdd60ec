"""Command-line surface: experiments and verification with CSV/JSON output.

Subcommands
-----------
``eps-k``     effective / fraction-pick error-rate table over a range of
              correction periods (exact where the support budget allows,
              Monte Carlo fallback flagged by provenance).
``delta``     reconstruction advantage of a scheme at one depth, exact
              (``--exact``) or Monte Carlo.
``critical``  exact critical-rate brackets over a range of periods, with
              diagnostic rows relating them to the plain threshold.
``fk-stats``  cluster-moment ensemble summaries at chosen levels.
``verify``    run one named verification suite; exit 4 on any failed gate.
``sweep``     fan a Monte Carlo advantage run over a (scheme, eps, depth)
              grid described by a JSON file, one row per cell.

Every command is deterministic given its arguments and seed.  Exit codes:
0 success, 2 argument/domain error, 3 budget error, 4 verification-gate
failure.  A JSON config file (``--config``) supplies defaults; explicit
flags win.  The resolved configuration is echoed into every report row.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .budget import BudgetError
from .channel import ChannelParams
from .correction import CorrectionScheme
from .estimators import McConfig, mc_delta, mc_effective_error
from .exact import (
    block_error_rate,
    block_scheme_delta,
    critical_point_k,
    delta_exact,
    effective_error_rate,
    fraction_error_rate,
    fraction_scheme_delta,
    renormalized_delta,
)
from .fk import moment_bound_report, sample_size_ensemble
from .report import EXACT, MC, ReportRow, rows_to_csv, rows_to_json
from .rng import SeedSpec
from .verify import SUITE_NAMES, results_to_rows, run_suite

__all__ = ["RunConfig", "build_parser", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_GATE = 4

_EXACT_TOL = 1e-12
_FORMATS = ("csv", "json")


def parse_k_values(text: str) -> tuple[int, ...]:
    """Parse a period list like ``"3"``, ``"1..4"``, or ``"1,3,9"``."""
    values: list[int] = []
    try:
        for chunk in text.split(","):
            chunk = chunk.strip()
            if ".." in chunk:
                first, _, last = chunk.partition("..")
                lo, hi = int(first), int(last)
                if hi < lo:
                    raise ValueError
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(chunk))
        if not values or min(values) < 1:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected positive integers, a range like 1..4, or a comma list, "
            f"got {text!r}"
        ) from None
    return tuple(values)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved arguments of one CLI run, validated before compute."""

    command: str
    r: int | None = None
    depth: int | None = None
    epsilon: float | None = None
    p: float | None = None
    scheme: str = "Identity"
    replicates: int = 10_000
    seed: int = 0
    k_values: tuple[int, ...] | None = None
    M: int | None = None
    samples: int = 200
    budget: int | None = None
    out: str | None = None
    fmt: str = "csv"
    reproducible: bool = False
    exact: bool = False

    def __post_init__(self) -> None:
        if self.epsilon is not None and self.p is not None:
            raise ValueError("give either an error rate or an error-free rate, not both")
        if self.epsilon is not None and not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"error rate must lie in [0, 0.5), got {self.epsilon}")
        if self.p is not None and not 0.0 < self.p <= 1.0:
            raise ValueError(f"error-free rate must lie in (0, 1], got {self.p}")
        if self.r is not None and self.r < 2:
            raise ValueError(f"branching rate must be >= 2, got {self.r}")
        if self.depth is not None and self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.M is not None and self.M < 1:
            raise ValueError(f"block size must be >= 1, got {self.M}")
        if self.budget is not None and self.budget < 2:
            raise ValueError(f"budget must be >= 2, got {self.budget}")
        if self.fmt not in _FORMATS:
            raise ValueError(f"format must be one of {_FORMATS}, got {self.fmt!r}")
        if self.k_values is not None and any(k < 1 for k in self.k_values):
            raise ValueError(f"periods must be >= 1, got {self.k_values}")

    @property
    def epsilon_value(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        if self.p is not None:
            return (1.0 - self.p) / 2.0
        raise ValueError("this command needs an error rate (--eps or --p)")

    @property
    def p_value(self) -> float:
        if self.p is not None:
            return self.p
        return 1.0 - 2.0 * self.epsilon_value

    def seed_spec(self) -> SeedSpec:
        return SeedSpec(master_seed=self.seed)

    def echo(self) -> dict[str, object]:
        """Resolved configuration carried in every report row."""
        out: dict[str, object] = {"command": self.command}
        if self.r is not None:
            out["r"] = self.r
        if self.epsilon is not None or self.p is not None:
            out["eps"] = self.epsilon_value
            out["p"] = self.p_value
        if self.depth is not None:
            out["depth"] = self.depth
        if self.command in ("delta", "sweep"):
            out["scheme"] = self.scheme
        if self.command in ("delta", "eps-k", "sweep") and not self.exact:
            out["replicates"] = self.replicates
        if self.command == "fk-stats":
            out["samples"] = self.samples
        if self.command in ("delta", "eps-k", "fk-stats", "sweep"):
            out["seed"] = self.seed
        if self.budget is not None:
            out["budget"] = self.budget
        return out


def _row(
    cfg: RunConfig,
    quantity: str,
    value: float,
    provenance: str,
    *,
    params: dict[str, object] | None = None,
    lo: float | None = None,
    hi: float | None = None,
    tolerance: float | None = None,
) -> ReportRow:
    merged = cfg.echo()
    if params:
        merged.update(params)
    return ReportRow(
        experiment=cfg.command,
        params=merged,
        quantity=quantity,
        value=float(value),
        provenance=provenance,
        lo=lo,
        hi=hi,
        tolerance=tolerance,
    )


# --- subcommand implementations ----------------------------------------------


def cmd_eps_k(cfg: RunConfig) -> list[ReportRow]:
    """Error-rate table over periods: exact under the support budget, Monte
    Carlo (flagged) when only sampling fits."""
    if cfg.r is None or cfg.k_values is None:
        raise ValueError("eps-k needs --r and --k")
    eps = cfg.epsilon_value
    rows = []
    for k in cfg.k_values:
        eps_tilde = fraction_error_rate(k, eps)
        kp = {"k": k}
        try:
            eps_k = effective_error_rate(k, cfg.r, eps, cfg.budget)
            rows.append(
                _row(cfg, "eps_k", eps_k, EXACT, params=kp, tolerance=_EXACT_TOL)
            )
            rows.append(
                _row(cfg, "eps_tilde_k", eps_tilde, EXACT, params=kp, tolerance=_EXACT_TOL)
            )
            rows.append(
                _row(cfg, "t_stat", eps_tilde - eps_k, EXACT, params=kp, tolerance=_EXACT_TOL)
            )
            rows.append(
                _row(cfg, "p_k", 1.0 - 2.0 * eps_k, EXACT, params=kp, tolerance=_EXACT_TOL)
            )
        except BudgetError:
            est = mc_effective_error(
                cfg.r, eps, k=k, replicates=cfg.replicates, seed=cfg.seed_spec()
            )
            lo, hi = est.ci
            rows.append(
                _row(cfg, "eps_k", est.eps_hat, MC, params=kp, lo=lo, hi=hi)
            )
            rows.append(
                _row(cfg, "eps_tilde_k", eps_tilde, EXACT, params=kp, tolerance=_EXACT_TOL)
            )
            rows.append(
                _row(
                    cfg, "t_stat", eps_tilde - est.eps_hat, MC, params=kp,
                    lo=eps_tilde - hi, hi=eps_tilde - lo,
                )
            )
            rows.append(
                _row(
                    cfg, "p_k", 1.0 - 2.0 * est.eps_hat, MC, params=kp,
                    lo=1.0 - 2.0 * hi, hi=1.0 - 2.0 * lo,
                )
            )
    if cfg.M is not None:
        rows.append(
            _row(
                cfg, "eps_bar_M", block_error_rate(cfg.M, eps), EXACT,
                params={"M": cfg.M}, tolerance=_EXACT_TOL,
            )
        )
    return rows


def _exact_scheme_delta(cfg: RunConfig, scheme: CorrectionScheme) -> float:
    r, depth, eps = cfg.r, cfg.depth, cfg.epsilon_value
    if scheme.removes_minority:
        raise ValueError(
            "minority-removal schemes have no exact engine; drop --exact"
        )
    if scheme.variant == "Identity":
        return delta_exact(depth, r, eps, cfg.budget)
    if scheme.descent_based:
        if depth % scheme.k != 0 or depth < scheme.k:
            raise ValueError(
                f"depth {depth} must be a positive multiple of the period {scheme.k}"
            )
        m_levels = depth // scheme.k - 1
        if scheme.variant == "WithinDescentMajority":
            return renormalized_delta(scheme.k, m_levels, r, eps, cfg.budget)
        return fraction_scheme_delta(scheme.k, m_levels, r, eps, cfg.budget)
    start = scheme.start_level(r)
    if depth < start:
        raise ValueError(
            f"depth {depth} is above the first corrected level {start} "
            f"of block size {scheme.M}"
        )
    return block_scheme_delta(scheme.M, depth - start, r, eps, budget=cfg.budget)


def cmd_delta(cfg: RunConfig) -> list[ReportRow]:
    """Reconstruction advantage of one scheme at one depth."""
    if cfg.r is None or cfg.depth is None:
        raise ValueError("delta needs --r and --depth")
    descriptor = cfg.scheme
    if cfg.M is not None:
        if descriptor != "Identity":
            raise ValueError("give either --M or --scheme, not both")
        descriptor = f"BlockMajorityEveryStep{{M={cfg.M}}}"
    scheme = CorrectionScheme.parse(descriptor)
    params = {"scheme": scheme.descriptor(), "level": cfg.depth}
    if cfg.exact:
        value = _exact_scheme_delta(cfg, scheme)
        return [
            _row(cfg, "delta_n", value, EXACT, params=params, tolerance=_EXACT_TOL)
        ]
    est = mc_delta(
        McConfig(
            r=cfg.r,
            depth=cfg.depth,
            scheme=scheme,
            channel=ChannelParams(epsilon=cfg.epsilon_value),
            seed=cfg.seed_spec(),
            replicates=cfg.replicates,
            record_levels=(cfg.depth,),
        )
    )[-1]
    params["renormalized"] = est.renormalized
    return [
        _row(
            cfg, "delta_n", est.delta_hat, MC, params=params,
            lo=est.ci[0], hi=est.ci[1],
        )
    ]


def cmd_critical(cfg: RunConfig) -> list[ReportRow]:
    """Critical error-free rates over periods, with diagnostic rows."""
    if cfg.r is None or cfg.k_values is None:
        raise ValueError("critical needs --r and --k")
    rows = []
    for k in cfg.k_values:
        est = critical_point_k(k, cfg.r, tol=1e-9, budget=cfg.budget)
        kp = {"k": k, "monotone": est.objective_monotone}
        rows.append(
            _row(
                cfg, "p_c_k", est.midpoint, EXACT, params=kp,
                lo=est.p_lo, hi=est.p_hi, tolerance=est.tolerance,
            )
        )
        rows.append(
            _row(
                cfg, "p_c_times_r", est.midpoint * cfg.r, EXACT, params=kp,
                tolerance=est.tolerance * cfg.r,
            )
        )
    rows.append(
        _row(
            cfg, "ks_reference", 1.0 / math.sqrt(cfg.r), EXACT,
            params={"meaning": "plain-channel critical rate 1/sqrt(r)"},
            tolerance=0.0,
        )
    )
    return rows


def _median_interval(values: np.ndarray, level: float = 0.99) -> tuple[float, float]:
    """Distribution-free order-statistic interval for the median."""
    ordered = np.sort(values)
    n = ordered.size
    half = norm.ppf(0.5 + level / 2.0) * math.sqrt(n * 0.25)
    lo = max(int(math.floor(n / 2.0 - half)), 0)
    hi = min(int(math.ceil(n / 2.0 + half)), n - 1)
    return float(ordered[lo]), float(ordered[hi])


def cmd_fk_stats(cfg: RunConfig) -> list[ReportRow]:
    """Cluster-moment ensemble summaries per level."""
    if cfg.r is None or cfg.k_values is None:
        raise ValueError("fk-stats needs --r and --k")
    p = cfg.p_value
    summaries = moment_bound_report(
        p, cfg.r, cfg.k_values, cfg.samples, cfg.seed_spec(), require_regime=False
    )
    rows = []
    for summary in summaries:
        ensemble = sample_size_ensemble(p, cfg.r, summary.k, cfg.seed_spec(), cfg.samples)
        kp = {"k": summary.k, "regime_ok": summary.regime_ok}
        z2, z3, w = ensemble.z2_ratio, ensemble.z3_ratio, ensemble.W_k
        rows.append(
            _row(
                cfg, "z2_ratio_min", summary.min_z2_ratio, MC, params=kp,
                lo=float(z2.min()), hi=float(z2.max()),
            )
        )
        med_lo, med_hi = _median_interval(z2)
        rows.append(
            _row(
                cfg, "z2_ratio_median", summary.median_z2_ratio, MC, params=kp,
                lo=med_lo, hi=med_hi,
            )
        )
        med_lo, med_hi = _median_interval(z3)
        rows.append(
            _row(
                cfg, "z3_ratio_median", summary.median_z3_ratio, MC, params=kp,
                lo=med_lo, hi=med_hi,
            )
        )
        spread = norm.ppf(0.995) * float(w.std(ddof=1)) / math.sqrt(w.size)
        rows.append(
            _row(
                cfg, "W_mean", summary.mean_W, MC, params=kp,
                lo=summary.mean_W - spread, hi=summary.mean_W + spread,
            )
        )
        rows.append(
            _row(
                cfg, "z2_floor", summary.z2_floor, EXACT, params=kp, tolerance=0.0
            )
        )
    return rows


def cmd_verify(cfg: RunConfig, suite: str, seed_given: bool) -> tuple[list[ReportRow], bool]:
    """Run one verification suite; returns its rows and overall pass."""
    results = run_suite(suite, seed=cfg.seed if seed_given else None)
    base = cfg.echo()
    if seed_given:
        base["seed"] = cfg.seed
    rows = []
    for row in results_to_rows(results):
        rows.append(dataclasses.replace(row, params={**base, **row.params}))
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.suite}:{res.name}  measured={res.measured:.6g}  "
              f"required: {res.requirement}")
    passed = all(res.passed for res in results)
    print(f"suite {suite}: {'all gates passed' if passed else 'GATE FAILURE'}")
    return rows, passed


def cmd_sweep(cfg: RunConfig, grid_path: str, overrides: dict[str, bool]) -> list[ReportRow]:
    """Monte Carlo advantage over a (scheme, eps, depth) grid, one row per cell."""
    with open(grid_path, encoding="utf-8") as fh:
        grid = json.load(fh)
    for key in ("r", "schemes", "eps", "depths"):
        if key not in grid:
            raise ValueError(f"sweep grid file is missing {key!r}")
    r = int(grid["r"])
    schemes = [str(s) for s in grid["schemes"]]
    eps_list = [float(e) for e in grid["eps"]]
    depths = [int(d) for d in grid["depths"]]
    if not schemes or not eps_list or not depths:
        raise ValueError("sweep grid axes must be non-empty")
    replicates = cfg.replicates if overrides["replicates"] else int(
        grid.get("replicates", cfg.replicates)
    )
    seed = cfg.seed if overrides["seed"] else int(grid.get("seed", cfg.seed))
    base = dataclasses.replace(
        cfg, r=r, replicates=replicates, seed=seed, scheme="grid"
    )
    rows = []
    for descriptor in schemes:
        scheme = CorrectionScheme.parse(descriptor)
        for eps in eps_list:
            if not 0.0 <= eps < 0.5:
                raise ValueError(f"grid error rate must lie in [0, 0.5), got {eps}")
            for depth in depths:
                est = mc_delta(
                    McConfig(
                        r=r,
                        depth=depth,
                        scheme=scheme,
                        channel=ChannelParams(epsilon=eps),
                        seed=SeedSpec(master_seed=seed),
                        replicates=replicates,
                        record_levels=(depth,),
                    )
                )[-1]
                rows.append(
                    _row(
                        base, "delta_n", est.delta_hat, MC,
                        params={
                            "scheme": scheme.descriptor(),
                            "cell_eps": eps,
                            "level": depth,
                            "renormalized": est.renormalized,
                        },
                        lo=est.ci[0], hi=est.ci[1],
                    )
                )
    return rows


# --- argument parsing and dispatch -------------------------------------------


def _add_output_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=_FORMATS, default=None,
                    help="output format (default csv)")
    sp.add_argument("--out", default=None, help="write the report to this path")
    sp.add_argument("--reproducible", action="store_true",
                    help="suppress the timestamp header for byte-identical output")
    sp.add_argument("--config", default=None,
                    help="JSON file of defaults; explicit flags win")


def _add_channel_flags(sp: argparse.ArgumentParser) -> None:
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--eps", type=float, default=None, help="edge error rate in [0, 0.5)")
    group.add_argument("--p", type=float, default=None, help="edge error-free rate in (0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecast",
        description="Noisy broadcast on regular trees: exact engine, "
                    "self-correction schemes, and Monte Carlo estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eps-k", help="error-rate table over correction periods")
    sp.add_argument("--r", type=int, default=None, help="branching rate")
    sp.add_argument("--k", type=parse_k_values, default=None,
                    help="period or range, e.g. 3 or 1..4")
    sp.add_argument("--M", type=int, default=None,
                    help="also report the block-majority error for this block size")
    sp.add_argument("--replicates", type=int, default=None,
                    help="Monte Carlo fallback sample count")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--budget", type=int, default=None, help="support budget override")
    _add_channel_flags(sp)
    _add_output_flags(sp)

    sp = sub.add_parser("delta", help="reconstruction advantage at one depth")
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--depth", type=int, default=None)
    sp.add_argument("--scheme", default=None,
                    help='descriptor like Identity or "WithinDescentMajority{k=2}"')
    sp.add_argument("--M", type=int, default=None,
                    help="shorthand for BlockMajorityEveryStep{M=...}")
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--exact", action="store_true",
                    help="use the exact engine instead of Monte Carlo")
    _add_channel_flags(sp)
    _add_output_flags(sp)

    sp = sub.add_parser("critical", help="exact critical-rate table")
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--k", type=parse_k_values, default=None)
    sp.add_argument("--budget", type=int, default=None)
    _add_output_flags(sp)

    sp = sub.add_parser("fk-stats", help="cluster-moment ensemble summaries")
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--k", type=parse_k_values, default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    _add_channel_flags(sp)
    _add_output_flags(sp)

    sp = sub.add_parser("verify", help="run one verification suite")
    sp.add_argument("suite", choices=SUITE_NAMES)
    sp.add_argument("--seed", type=int, default=None,
                    help="override the suite's pinned seed")
    _add_output_flags(sp)

    sp = sub.add_parser("sweep", help="advantage over a JSON-described grid")
    sp.add_argument("grid", help="JSON file with r, schemes, eps, depths")
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    _add_output_flags(sp)

    return parser


def _load_config(path: str | None) -> dict[str, object]:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise ValueError("config file must hold a JSON object")
    return loaded


def _pick(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _build_run_config(args: argparse.Namespace) -> tuple[RunConfig, dict[str, bool]]:
    config = _load_config(getattr(args, "config", None))
    k_raw = _pick(args, config, "k", None)
    if isinstance(k_raw, str):
        k_values = parse_k_values(k_raw)
    elif isinstance(k_raw, int):
        k_values = (k_raw,)
    elif isinstance(k_raw, (list, tuple)):
        k_values = tuple(int(v) for v in k_raw)
    else:
        k_values = k_raw
    flag_eps = getattr(args, "eps", None)
    flag_p = getattr(args, "p", None)
    if flag_eps is not None or flag_p is not None:
        eps, p = flag_eps, flag_p
    else:
        eps, p = config.get("eps"), config.get("p")
    cfg = RunConfig(
        command=args.command,
        r=_pick(args, config, "r", None),
        depth=_pick(args, config, "depth", None),
        epsilon=None if eps is None else float(eps),
        p=None if p is None else float(p),
        scheme=str(_pick(args, config, "scheme", "Identity")),
        replicates=int(_pick(args, config, "replicates", 10_000)),
        seed=int(_pick(args, config, "seed", 0)),
        k_values=k_values,
        M=_pick(args, config, "M", None),
        samples=int(_pick(args, config, "samples", 200)),
        budget=_pick(args, config, "budget", None),
        out=_pick(args, config, "out", None),
        fmt=str(_pick(args, config, "format", "csv")),
        reproducible=bool(getattr(args, "reproducible", False)
                          or config.get("reproducible", False)),
        exact=bool(getattr(args, "exact", False) or config.get("exact", False)),
    )
    overrides = {
        "replicates": getattr(args, "replicates", None) is not None,
        "seed": getattr(args, "seed", None) is not None,
    }
    return cfg, overrides


def _emit(cfg: RunConfig, rows: list[ReportRow]) -> None:
    text = (
        rows_to_csv(rows, cfg.reproducible)
        if cfg.fmt == "csv"
        else rows_to_json(rows, cfg.reproducible)
    )
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {cfg.out}")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, overrides = _build_run_config(args)
        if args.command == "eps-k":
            rows = cmd_eps_k(cfg)
        elif args.command == "delta":
            rows = cmd_delta(cfg)
        elif args.command == "critical":
            rows = cmd_critical(cfg)
        elif args.command == "fk-stats":
            rows = cmd_fk_stats(cfg)
        elif args.command == "verify":
            rows, passed = cmd_verify(cfg, args.suite, overrides["seed"])
            if cfg.out or getattr(args, "format", None) is not None:
                _emit(cfg, rows)
            return EXIT_OK if passed else EXIT_GATE
        else:
            rows = cmd_sweep(cfg, args.grid, overrides)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(cfg, rows)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
