"""Contagion-weighted dissatisfaction dynamics and the simulation loop.

The model couples each agent's dissatisfaction D in [0, 1] to two pulls:
electricity deprivation (weighted by ``omega1``) and the media-access-gated
average of everyone else's dissatisfaction (weighted by ``omega2``). Each
fixed Euler step of size ``dt`` moves D toward the combined pull target at a
rate proportional to how much contagion the agent currently receives, so an
agent cut off from media (or surrounded by content neighbors) reacts slowly.

With ``omega1 + omega2 <= 1`` and ``dt <= 1`` every step is a convex
combination of values in [0, 1]; the clamp in :func:`step` is a pure guard
and the engine counts how often it fires (it never should for valid inputs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._version import __version__
from .core_types import (
    AgentState,
    ContagionNetwork,
    ModelParams,
    PiecewiseSchedule,
    Scenario,
    SimulationResult,
    ValidationError,
)
from .metrics import aggregate_trajectory


@dataclass(frozen=True)
class ContagionSnapshot:
    """Contagion state at one instant.

    ``gamma`` holds the access-attenuated weights, ``social_term`` the
    contagion pull g per agent (at most ``omega2``), and ``rate`` the
    per-agent response rate g / omega2 lifted to at least the rate floor.
    """

    gamma: np.ndarray
    social_term: np.ndarray
    rate: np.ndarray


class FeatureContractError(ValueError):
    """A feature-model rule produced a value outside [0, 1]."""


@dataclass(frozen=True)
class FeatureModel:
    """Pluggable update rules for a generic social feature in [0, 1].

    ``local_term(cyber, physical, own)`` scores the agent's own situation;
    ``social_term(features, weight_row)`` scores the influence of everyone
    else. Both must map [0, 1] inputs to [0, 1] outputs.
    """

    local_term: Callable[[float, float, float], float]
    social_term: Callable[[np.ndarray, np.ndarray], float]


def compute_contagion_weights(network: ContagionNetwork, access: Sequence[float]) -> np.ndarray:
    """Attenuate base weights by both endpoints' media access.

    gamma[n, m] = base_weights[n, m] * access[n] * access[m]. An agent with
    zero access is severed in both directions; the diagonal stays zero.
    """
    access = np.asarray(access, dtype=float)
    if access.shape != (network.n_agents,):
        raise ValidationError(
            [f"access must have shape ({network.n_agents},) (got {access.shape})"]
        )
    return network.base_weights * np.outer(access, access)


def social_diffusion(
    gamma: np.ndarray,
    base: np.ndarray,
    dissatisfaction: Sequence[float],
    omega2: float,
) -> np.ndarray:
    """Per-agent contagion pull g.

    g[n] = omega2 * (sum_m gamma[n, m] * D[m]) / (sum_m base[n, m]), and 0
    for agents whose base row sums to zero (nobody influences them).
    Normalizing by the base row sum rather than the attenuated one is what
    lets limited media access damp the pull instead of cancelling out of the
    ratio; under full access the two coincide and g is exactly omega2 times
    the weighted mean dissatisfaction of the neighbors.
    """
    gamma = np.asarray(gamma, dtype=float)
    base = np.asarray(base, dtype=float)
    d = np.asarray(dissatisfaction, dtype=float)
    n = d.shape[0]
    if gamma.shape != (n, n) or base.shape != (n, n):
        raise ValidationError(
            [f"gamma and base must have shape ({n}, {n}) (got {gamma.shape} and {base.shape})"]
        )
    row_sum = base.sum(axis=1)
    pull = gamma @ d
    out = np.zeros(n)
    np.divide(pull, row_sum, out=out, where=row_sum > 0.0)
    return omega2 * out


def compute_target(
    electricity: Sequence[float], social_term: Sequence[float], omega1: float
) -> np.ndarray:
    """Pull target: omega1 * (1 - E) + g.

    Nonincreasing in each agent's electricity availability and, through g,
    nondecreasing in every other agent's dissatisfaction. Guaranteed to lie
    in [0, 1] whenever omega1 + omega2 <= 1.
    """
    return omega1 * (1.0 - np.asarray(electricity, dtype=float)) + np.asarray(social_term, dtype=float)


def contagion_snapshot(
    network: ContagionNetwork,
    access: Sequence[float],
    dissatisfaction: Sequence[float],
    params: ModelParams,
) -> ContagionSnapshot:
    """Bundle gamma, the contagion pull, and the response rate at one instant."""
    gamma = compute_contagion_weights(network, access)
    g = social_diffusion(gamma, network.base_weights, dissatisfaction, params.omega2)
    if params.omega2 > 0.0:
        rate = np.maximum(g / params.omega2, params.rate_floor)
    else:
        rate = np.full(network.n_agents, params.rate_floor)
    return ContagionSnapshot(gamma=gamma, social_term=g, rate=rate)


def step(
    dissatisfaction: Sequence[float],
    snapshot: ContagionSnapshot,
    target: Sequence[float],
    dt: float,
) -> np.ndarray:
    """One Euler step: move D toward the target at the snapshot's rate.

    D'[n] = D[n] + rate[n] * (target[n] - D[n]) * dt, clamped to [0, 1].
    The clamp is a guard only: with rate and target in [0, 1] and dt <= 1
    the update is a convex combination and cannot leave the interval.
    """
    d = np.asarray(dissatisfaction, dtype=float)
    nxt = d + snapshot.rate * (np.asarray(target, dtype=float) - d) * dt
    return np.clip(nxt, 0.0, 1.0)


def step_feature(
    model: FeatureModel,
    state: Sequence[float],
    cyber: Sequence[float],
    physical: Sequence[float],
    weights: np.ndarray,
    omega1: float,
    omega2: float,
    dt: float,
) -> np.ndarray:
    """Generic Euler step for any social feature.

    S'[n] = S[n] + (omega1 * local + omega2 * social - S[n]) * dt, clamped.
    Raises :class:`FeatureContractError` if either rule leaves [0, 1].
    """
    s = np.asarray(state, dtype=float)
    c = np.asarray(cyber, dtype=float)
    p = np.asarray(physical, dtype=float)
    w = np.asarray(weights, dtype=float)
    nxt = np.empty_like(s)
    for n in range(s.shape[0]):
        local = float(model.local_term(c[n], p[n], s[n]))
        social = float(model.social_term(s, w[n]))
        if not 0.0 <= local <= 1.0:
            raise FeatureContractError(f"local_term returned {local!r} for agent {n}, outside [0, 1]")
        if not 0.0 <= social <= 1.0:
            raise FeatureContractError(f"social_term returned {social!r} for agent {n}, outside [0, 1]")
        nxt[n] = s[n] + (omega1 * local + omega2 * social - s[n]) * dt
    return np.clip(nxt, 0.0, 1.0)


def dissatisfaction_feature_model() -> FeatureModel:
    """The dissatisfaction dynamics expressed as a generic feature model.

    Pair with :func:`normalized_contagion_weights` rows; the step target then
    equals :func:`compute_target` exactly, so :func:`step_feature` reproduces
    :func:`step` with the response rate fixed at 1.
    """
    return FeatureModel(
        local_term=lambda cyber, physical, own: 1.0 - physical,
        social_term=lambda features, weight_row: float(weight_row @ features),
    )


def normalized_contagion_weights(network: ContagionNetwork, access: Sequence[float]) -> np.ndarray:
    """Attenuated weights divided by each agent's base row sum (zero rows stay zero)."""
    gamma = compute_contagion_weights(network, access)
    row_sum = network.base_weights.sum(axis=1)
    out = np.zeros_like(gamma)
    np.divide(gamma, row_sum[:, None], out=out, where=row_sum[:, None] > 0.0)
    return out


def _sample_schedules(
    schedules: Sequence[PiecewiseSchedule], dt: float, n_steps: int
) -> np.ndarray:
    """Sample per-agent schedules on the step grid; identical objects sampled once."""
    cache: dict[int, np.ndarray] = {}
    columns = []
    for sched in schedules:
        key = id(sched)
        if key not in cache:
            cache[key] = sched.sample(dt, n_steps)
        columns.append(cache[key])
    return np.column_stack(columns) if columns else np.zeros((n_steps, 0))


def simulate(scenario: Scenario) -> SimulationResult:
    """Run the fixed-step Euler loop over the scenario horizon.

    Schedules are sampled at each step's start; state is recorded at t = 0
    and every ``report_every_hours`` thereafter. The run is deterministic:
    identical scenarios produce bit-identical results.
    """
    violations = scenario.validate()
    if violations:
        raise ValidationError(violations)

    params = scenario.params
    net = scenario.network
    n = net.n_agents
    dt = params.dt_hours
    n_steps = params.n_steps
    spr = params.steps_per_report

    e_grid = _sample_schedules(scenario.electricity, dt, n_steps)
    i_grid = _sample_schedules(scenario.media_access, dt, n_steps)
    # Deprivation part of the target, precomputed for every step.
    local_pull = params.omega1 * (1.0 - e_grid)

    alpha = net.base_weights
    row_sum = alpha.sum(axis=1)
    inv_row = np.zeros(n)
    np.divide(1.0, row_sum, out=inv_row, where=row_sum > 0.0)

    d = AgentState(scenario.initial_dissatisfaction).dissatisfaction.copy()
    floor = params.rate_floor
    omega2 = params.omega2
    has_contagion = omega2 > 0.0
    floor_vec = np.full(n, floor)

    n_reports = n_steps // spr
    times = np.arange(n_reports + 1) * params.report_every_hours
    recorded = np.empty((n_reports + 1, n))
    recorded[0] = d
    clamp_hits = 0

    for k in range(n_steps):
        i_t = i_grid[k]
        # (gamma @ d) / row_sum with gamma = alpha * outer(i, i), factored so the
        # attenuated matrix is never materialized: i * (alpha @ (i * d)) / row_sum.
        pull_ratio = i_t * (alpha @ (i_t * d)) * inv_row
        if has_contagion:
            rate = np.maximum(pull_ratio, floor) if floor > 0.0 else pull_ratio
            g = omega2 * pull_ratio
        else:
            rate = floor_vec
            g = 0.0
        target = local_pull[k] + g
        d = d + rate * (target - d) * dt
        if d.min() < 0.0 or d.max() > 1.0:
            clamp_hits += 1
            np.clip(d, 0.0, 1.0, out=d)
        if (k + 1) % spr == 0:
            recorded[(k + 1) // spr] = d

    rows = aggregate_trajectory(times, recorded, net.group_of)

    manifest = {
        "tool": "socio-grid-sim",
        "tool_version": __version__,
        "label": scenario.label,
        "params": params.as_dict(),
        "n_agents": n,
        "n_groups": net.n_groups,
        "groups": net.group_of.tolist(),
        "scenario_digest": scenario.content_digest(),
        "aggregation_std": "population",
        "rate_floor_active": floor > 0.0,
        "clamp_activations": clamp_hits,
        "n_report_times": n_reports + 1,
    }
    return SimulationResult(
        times=times,
        dissatisfaction=recorded,
        groups=net.group_of,
        aggregates=tuple(rows),
        manifest=manifest,
    )
