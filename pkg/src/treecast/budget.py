"""Desk-scale resource limits shared by the exact engine and the samplers.

Two independent knobs:

* the *support budget* caps the number of points in any exact count
  distribution (default 65 537, overridable through the ``TREECAST_BUDGET``
  environment variable or per call);
* the *vertex budget* caps the number of vertices materialized per tree level
  in sampling kernels (default 2**26).

Requests beyond a budget raise :class:`BudgetError` rather than degrade.
"""

from __future__ import annotations

import os

DEFAULT_SUPPORT_BUDGET = 65_537
DEFAULT_VERTEX_BUDGET = 1 << 26
SUPPORT_BUDGET_ENV = "TREECAST_BUDGET"


class BudgetError(RuntimeError):
    """A computation would exceed a declared desk-scale budget."""


def support_budget(override: int | None = None) -> int:
    """Resolve the support budget: explicit override, else env var, else default."""
    if override is not None:
        if override < 2:
            raise ValueError(f"support budget must be >= 2, got {override}")
        return int(override)
    env = os.environ.get(SUPPORT_BUDGET_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(
                f"{SUPPORT_BUDGET_ENV} must be an integer, got {env!r}"
            ) from exc
        if value < 2:
            raise ValueError(f"{SUPPORT_BUDGET_ENV} must be >= 2, got {value}")
        return value
    return DEFAULT_SUPPORT_BUDGET


def check_support(points: int, budget: int | None = None) -> int:
    """Raise :class:`BudgetError` unless ``points`` fits the support budget."""
    limit = support_budget(budget)
    if points > limit:
        raise BudgetError(
            f"distribution support of {points} points exceeds the budget of "
            f"{limit}; raise {SUPPORT_BUDGET_ENV} or pass a larger budget "
            "explicitly if this is intentional"
        )
    return points


def check_vertices(count: int, budget: int | None = None) -> int:
    """Raise :class:`BudgetError` unless a level of ``count`` vertices fits."""
    limit = DEFAULT_VERTEX_BUDGET if budget is None else int(budget)
    if count > limit:
        raise BudgetError(
            f"tree level of {count} vertices exceeds the per-level budget of "
            f"{limit}"
        )
    return count
