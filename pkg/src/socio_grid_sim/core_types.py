"""Shared domain vocabulary: schedules, network, parameters, scenarios, results.

Everything in this module is immutable after construction and safe to share
read-only across parallel workers. All state variables live on [0, 1];
satisfaction is always the derived view ``1 - dissatisfaction`` and is never
stored as independent state.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .metrics import AggregateRow

# Agent ids are dense indices 0..N-1, stable for the lifetime of a scenario.
AgentId = int


class ValidationError(ValueError):
    """Invalid domain object. ``violations`` lists every broken invariant."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _check_unit(value: float, name: str, errors: list[str]) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        errors.append(f"{name} must be in [0, 1] (got {value!r})")


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AgentState:
    """Validated population state: one dissatisfaction value per agent.

    Rejects any value outside [0, 1] on construction. Satisfaction is the
    derived view ``1 - dissatisfaction``.
    """

    dissatisfaction: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.dissatisfaction, dtype=float))
        errors: list[str] = []
        if values.ndim != 1:
            errors.append(f"dissatisfaction must be one value per agent (got shape {values.shape})")
        elif values.size == 0:
            errors.append("dissatisfaction must be nonempty")
        else:
            for idx in np.flatnonzero(~((values >= 0.0) & (values <= 1.0))):
                errors.append(f"dissatisfaction[{idx}] = {values[idx]!r} outside [0, 1]")
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "dissatisfaction", _readonly(values))

    @property
    def n_agents(self) -> int:
        return int(self.dissatisfaction.size)

    @property
    def satisfaction(self) -> np.ndarray:
        return 1.0 - self.dissatisfaction

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AgentState):
            return NotImplemented
        return np.array_equal(self.dissatisfaction, other.dissatisfaction)


@dataclass(frozen=True)
class PiecewiseSchedule:
    """Piecewise-constant signal in [0, 1] over the time span [0, horizon_hours).

    ``breakpoints`` are (start_hour, value) pairs; each value holds on the
    left-closed interval [start_i, start_{i+1}). The first breakpoint must sit
    at hour 0 and starts must be strictly increasing.
    """

    breakpoints: tuple[tuple[float, float], ...]
    horizon_hours: float

    def __post_init__(self):
        try:
            points = tuple((float(s), float(v)) for s, v in self.breakpoints)
        except (TypeError, ValueError):
            raise ValidationError([f"breakpoints must be (start_hour, value) pairs (got {self.breakpoints!r})"])
        object.__setattr__(self, "breakpoints", points)
        object.__setattr__(self, "horizon_hours", float(self.horizon_hours))
        errors: list[str] = []
        if not (math.isfinite(self.horizon_hours) and self.horizon_hours > 0.0):
            errors.append(f"horizon_hours must be > 0 (got {self.horizon_hours!r})")
        if not points:
            errors.append("breakpoints must be nonempty")
        else:
            if points[0][0] != 0.0:
                errors.append(f"first breakpoint must start at hour 0 (got {points[0][0]!r})")
            for i, (start, value) in enumerate(points):
                _check_unit(value, f"breakpoints[{i}].value", errors)
                if i > 0 and not (start > points[i - 1][0]):
                    errors.append(
                        f"breakpoints[{i}].start_hour = {start!r} must exceed the previous start {points[i - 1][0]!r}"
                    )
                if math.isfinite(self.horizon_hours) and start >= self.horizon_hours and i > 0:
                    errors.append(
                        f"breakpoints[{i}].start_hour = {start!r} must lie inside [0, {self.horizon_hours!r})"
                    )
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "_starts", tuple(s for s, _ in points))
        object.__setattr__(self, "_values", tuple(v for _, v in points))

    def value_at(self, t: float) -> float:
        """Value of the unique segment containing ``t`` (left-closed)."""
        if not (0.0 <= t < self.horizon_hours):
            raise ValueError(f"t = {t!r} outside schedule span [0, {self.horizon_hours!r})")
        return self._values[bisect_right(self._starts, t) - 1]

    def sample(self, dt: float, n_steps: int) -> np.ndarray:
        """Values on the step grid 0, dt, ..., (n_steps-1)*dt."""
        grid = np.arange(n_steps) * dt
        idx = np.searchsorted(np.asarray(self._starts), grid, side="right") - 1
        return np.asarray(self._values)[idx]

    @classmethod
    def constant(cls, value: float, horizon_hours: float) -> "PiecewiseSchedule":
        return cls(((0.0, value),), horizon_hours)


def schedule_value_at(schedule: PiecewiseSchedule, t: float) -> float:
    """Functional alias for :meth:`PiecewiseSchedule.value_at`."""
    return schedule.value_at(t)


@dataclass(frozen=True)
class ContagionNetwork:
    """Directed nonnegative base influence weights plus a group per agent.

    ``base_weights[n, m]`` is the raw strength of agent m's influence on
    agent n before media-access attenuation. The diagonal is zero (no
    self-contagion) and weights need not be symmetric. Groups are dense ids
    0..G-1, one per agent.
    """

    n_agents: int
    base_weights: np.ndarray
    group_of: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.base_weights, dtype=float)
        errors: list[str] = []
        n = int(self.n_agents)
        if n <= 0:
            errors.append(f"n_agents must be positive (got {self.n_agents!r})")
        if weights.shape != (n, n):
            errors.append(f"base_weights must have shape ({n}, {n}) (got {weights.shape})")
        elif not np.all(np.isfinite(weights)):
            errors.append("base_weights must be finite")
        else:
            if (weights < 0.0).any():
                bad = np.argwhere(weights < 0.0)[0]
                errors.append(
                    f"base_weights[{bad[0]}, {bad[1]}] = {weights[bad[0], bad[1]]!r} must be >= 0"
                )
            if np.any(np.diagonal(weights) != 0.0):
                idx = int(np.flatnonzero(np.diagonal(weights) != 0.0)[0])
                errors.append(f"base_weights diagonal must be zero (agent {idx} has self-weight)")
        try:
            groups = np.asarray(self.group_of)
            if groups.shape != (n,):
                errors.append(f"group_of must have shape ({n},) (got {groups.shape})")
                groups = None
            elif not np.all(groups == groups.astype(int)):
                errors.append("group_of must hold integer group ids")
                groups = None
            else:
                groups = groups.astype(int)
        except (TypeError, ValueError):
            errors.append(f"group_of must hold integer group ids (got {self.group_of!r})")
            groups = None
        if groups is not None:
            if (groups < 0).any():
                errors.append("group ids must be nonnegative")
            else:
                present = set(np.unique(groups).tolist())
                missing = sorted(set(range(max(present) + 1)) - present)
                if missing:
                    errors.append(f"group ids must be dense 0..G-1 (missing groups {missing})")
        if errors:
            raise ValidationError(errors)
        frozen_groups = np.array(groups, dtype=int, copy=True)
        frozen_groups.setflags(write=False)
        object.__setattr__(self, "n_agents", n)
        object.__setattr__(self, "base_weights", _readonly(weights))
        object.__setattr__(self, "group_of", frozen_groups)

    @property
    def n_groups(self) -> int:
        return int(self.group_of.max()) + 1

    @property
    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.group_of, minlength=self.n_groups)

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.group_of == group)

    @classmethod
    def full_within_groups(cls, group_of: Iterable[int], weight: float = 1.0) -> "ContagionNetwork":
        """All-to-all weight within each group, zero across groups and on the diagonal."""
        groups = np.asarray(list(group_of), dtype=int)
        same = groups[:, None] == groups[None, :]
        weights = np.where(same, float(weight), 0.0)
        np.fill_diagonal(weights, 0.0)
        return cls(groups.size, weights, groups)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContagionNetwork):
            return NotImplemented
        return (
            self.n_agents == other.n_agents
            and np.array_equal(self.base_weights, other.base_weights)
            and np.array_equal(self.group_of, other.group_of)
        )


@dataclass(frozen=True)
class ModelParams:
    """Resolved model parameters.

    ``omega1`` weighs the electricity-deprivation pull, ``omega2`` the
    contagion pull; their sum may not exceed 1, which keeps every update a
    convex combination and the state provably inside [0, 1] without clamping.
    ``rate_floor`` optionally lifts the per-step response rate off zero so an
    all-zero group is not permanently absorbed.
    """

    horizon_hours: float
    omega1: float = 0.5
    omega2: float = 0.5
    dt_hours: float = 0.1
    rate_floor: float = 0.0
    report_every_hours: float = 1.0

    def __post_init__(self):
        errors: list[str] = []
        _check_unit(self.omega1, "omega1", errors)
        _check_unit(self.omega2, "omega2", errors)
        if not errors and self.omega1 + self.omega2 > 1.0:
            errors.append(
                f"omega1 + omega2 must be <= 1 (got {self.omega1!r} + {self.omega2!r} = {self.omega1 + self.omega2!r})"
            )
        if not (math.isfinite(self.dt_hours) and 0.0 < self.dt_hours <= 1.0):
            errors.append(f"dt_hours must be in (0, 1] (got {self.dt_hours!r})")
        _check_unit(self.rate_floor, "rate_floor", errors)
        if not (math.isfinite(self.horizon_hours) and self.horizon_hours > 0.0):
            errors.append(f"horizon_hours must be > 0 (got {self.horizon_hours!r})")
        if not (math.isfinite(self.report_every_hours) and self.report_every_hours > 0.0):
            errors.append(f"report_every_hours must be > 0 (got {self.report_every_hours!r})")
        elif math.isfinite(self.dt_hours) and 0.0 < self.dt_hours <= 1.0:
            steps = round(self.report_every_hours / self.dt_hours)
            if steps < 1 or abs(steps * self.dt_hours - self.report_every_hours) > 1e-9:
                errors.append(
                    f"dt_hours = {self.dt_hours!r} must divide report_every_hours = {self.report_every_hours!r}"
                )
        if errors:
            raise ValidationError(errors)

    @property
    def steps_per_report(self) -> int:
        return round(self.report_every_hours / self.dt_hours)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.horizon_hours / self.dt_hours + 1e-9))

    def as_dict(self) -> dict[str, float]:
        return {
            "omega1": self.omega1,
            "omega2": self.omega2,
            "dt_hours": self.dt_hours,
            "rate_floor": self.rate_floor,
            "horizon_hours": self.horizon_hours,
            "report_every_hours": self.report_every_hours,
        }


@dataclass(frozen=True)
class Scenario:
    """Complete simulation input: parameters, network, schedules, initial state."""

    params: ModelParams
    network: ContagionNetwork
    electricity: tuple[PiecewiseSchedule, ...]
    media_access: tuple[PiecewiseSchedule, ...]
    initial_dissatisfaction: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "electricity", tuple(self.electricity))
        object.__setattr__(self, "media_access", tuple(self.media_access))
        object.__setattr__(
            self, "initial_dissatisfaction", _readonly(np.atleast_1d(np.asarray(self.initial_dissatisfaction, dtype=float)))
        )
        violations = self.validate()
        if violations:
            raise ValidationError(violations)

    @property
    def n_agents(self) -> int:
        return self.network.n_agents

    def validate(self) -> list[str]:
        """Every violated invariant, empty when the scenario is valid."""
        errors: list[str] = []
        n = self.network.n_agents
        for name, schedules in (("electricity", self.electricity), ("media_access", self.media_access)):
            if len(schedules) != n:
                errors.append(f"{name} must provide one schedule per agent (got {len(schedules)} for {n} agents)")
            for idx, sched in enumerate(schedules):
                if sched.horizon_hours != self.params.horizon_hours:
                    errors.append(
                        f"{name}[{idx}].horizon_hours = {sched.horizon_hours!r} must equal params.horizon_hours = {self.params.horizon_hours!r}"
                    )
        d0 = self.initial_dissatisfaction
        if d0.shape != (n,):
            errors.append(f"initial_dissatisfaction must have shape ({n},) (got {d0.shape})")
        else:
            for idx in np.flatnonzero(~((d0 >= 0.0) & (d0 <= 1.0))):
                errors.append(f"initial_dissatisfaction[{idx}] = {d0[idx]!r} outside [0, 1]")
        return errors

    def content_digest(self) -> str:
        """Stable sha256 over the resolved scenario content, for manifests."""
        doc = {
            "label": self.label,
            "params": self.params.as_dict(),
            "groups": self.network.group_of.tolist(),
            "base_weights": self.network.base_weights.tolist(),
            "electricity": [s.breakpoints for s in self.electricity],
            "media_access": [s.breakpoints for s in self.media_access],
            "initial_dissatisfaction": self.initial_dissatisfaction.tolist(),
        }
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.params == other.params
            and self.network == other.network
            and self.electricity == other.electricity
            and self.media_access == other.media_access
            and np.array_equal(self.initial_dissatisfaction, other.initial_dissatisfaction)
            and self.label == other.label
        )


@dataclass(frozen=True)
class SimulationResult:
    """Per-agent dissatisfaction trajectories plus per-report aggregates.

    ``dissatisfaction`` has one row per report time; ``aggregates`` holds the
    per-group and global satisfaction statistics for the same times. The
    manifest records every resolved parameter needed to reproduce the run.
    """

    times: np.ndarray
    dissatisfaction: np.ndarray
    groups: np.ndarray
    aggregates: tuple["AggregateRow", ...]
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        times = _readonly(np.atleast_1d(np.asarray(self.times, dtype=float)))
        traj = np.asarray(self.dissatisfaction, dtype=float)
        if traj.ndim != 2 or traj.shape[0] != times.size:
            raise ValidationError(
                [f"dissatisfaction must have one row per report time (got {traj.shape} for {times.size} times)"]
            )
        groups = np.array(np.asarray(self.groups), dtype=int, copy=True)
        groups.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dissatisfaction", _readonly(traj))
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "aggregates", tuple(self.aggregates))

    @property
    def n_times(self) -> int:
        return int(self.times.size)

    @property
    def n_agents(self) -> int:
        return int(self.dissatisfaction.shape[1])

    @property
    def satisfaction(self) -> np.ndarray:
        return 1.0 - self.dissatisfaction

    def global_mean_satisfaction(self) -> np.ndarray:
        """Global mean satisfaction per report time, from the aggregate rows."""
        values = [row.mean_satisfaction for row in self.aggregates if row.scope is None]
        return np.asarray(values)
