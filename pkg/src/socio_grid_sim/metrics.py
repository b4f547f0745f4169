"""Group-level satisfaction statistics: mean, min, max, and spread."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_types import ValidationError


@dataclass(frozen=True)
class AggregateRow:
    """Satisfaction statistics for one scope (a group, or the whole population)
    at one report time. ``scope`` is a group index, or None for the global row.
    Standard deviation is the population form (divide by N, not N - 1)."""

    time_hours: float
    scope: int | None
    mean_satisfaction: float
    min_satisfaction: float
    max_satisfaction: float
    std_satisfaction: float

    @property
    def scope_label(self) -> str:
        return "global" if self.scope is None else f"group_{self.scope}"


def _checked_groups(n_agents: int, group_of: Sequence[int]) -> np.ndarray:
    groups = np.atleast_1d(np.asarray(group_of, dtype=int))
    errors: list[str] = []
    if n_agents == 0:
        errors.append("dissatisfaction must be nonempty")
    if groups.shape != (n_agents,):
        errors.append(f"group_of must have shape ({n_agents},) (got {groups.shape})")
    if errors:
        raise ValidationError(errors)
    sizes = np.bincount(groups, minlength=int(groups.max()) + 1)
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise ValidationError([f"group {g} has no members" for g in empty])
    return groups


def aggregate(
    time_hours: float, dissatisfaction: Sequence[float], group_of: Sequence[int]
) -> list[AggregateRow]:
    """One row per group followed by one global row.

    Statistics are computed on satisfaction = 1 - dissatisfaction, so the
    mean commutes with the flip while min and max swap roles.
    """
    d = np.atleast_1d(np.asarray(dissatisfaction, dtype=float))
    groups = _checked_groups(d.size, group_of)
    satisfaction = 1.0 - d

    def stats(scope: int | None, values: np.ndarray) -> AggregateRow:
        return AggregateRow(
            time_hours=float(time_hours),
            scope=scope,
            mean_satisfaction=float(values.mean()),
            min_satisfaction=float(values.min()),
            max_satisfaction=float(values.max()),
            std_satisfaction=float(values.std()),
        )

    rows = [stats(g, satisfaction[groups == g]) for g in range(int(groups.max()) + 1)]
    rows.append(stats(None, satisfaction))
    return rows


def aggregate_trajectory(
    times: Sequence[float], dissatisfaction: np.ndarray, group_of: Sequence[int]
) -> list[AggregateRow]:
    """Aggregate a whole trajectory at once.

    Equivalent to calling :func:`aggregate` per report time (same rows, same
    order) but with the statistics vectorized over the time axis, which is
    what keeps plan search cheap.
    """
    d = np.asarray(dissatisfaction, dtype=float)
    if d.ndim != 2:
        raise ValidationError([f"dissatisfaction must be 2-D (times x agents), got shape {d.shape}"])
    times = np.asarray(times, dtype=float)
    if times.shape != (d.shape[0],):
        raise ValidationError([f"times must have shape ({d.shape[0]},) (got {times.shape})"])
    groups = _checked_groups(d.shape[1], group_of)
    satisfaction = 1.0 - d

    scopes: list[tuple[int | None, np.ndarray]] = [
        (g, satisfaction[:, groups == g]) for g in range(int(groups.max()) + 1)
    ]
    scopes.append((None, satisfaction))
    per_scope = [
        (scope, sub.mean(axis=1), sub.min(axis=1), sub.max(axis=1), sub.std(axis=1))
        for scope, sub in scopes
    ]
    rows: list[AggregateRow] = []
    for t_idx, t in enumerate(times):
        for scope, mean, mn, mx, std in per_scope:
            rows.append(
                AggregateRow(
                    time_hours=float(t),
                    scope=scope,
                    mean_satisfaction=float(mean[t_idx]),
                    min_satisfaction=float(mn[t_idx]),
                    max_satisfaction=float(mx[t_idx]),
                    std_satisfaction=float(std[t_idx]),
                )
            )
    return rows
