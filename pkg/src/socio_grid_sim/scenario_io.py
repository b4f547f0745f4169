"""Scenario documents on disk, the built-in case study, and result output.

Scenario files are JSON with a versioned schema. Loading either yields a
fully validated :class:`Scenario` or raises with the complete list of
violations, each naming the offending field and bound. Result output is
deterministic: fixed 9-significant-digit formatting and a manifest with no
wall-clock timestamps, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core_types import (
    ContagionNetwork,
    ModelParams,
    PiecewiseSchedule,
    Scenario,
    SimulationResult,
    ValidationError,
)

SCHEMA_VERSION = 1

_PARAM_KEYS = ("omega1", "omega2", "dt_hours", "rate_floor", "horizon_hours", "report_every_hours")


class ScenarioParseError(ValueError):
    """The file is not parseable as a scenario document at all."""


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _breakpoints_from_block(block: object, context: str, errors: list[str]) -> list[tuple[float, float]] | None:
    if not isinstance(block, list) or not all(
        isinstance(p, (list, tuple)) and len(p) == 2 and _is_number(p[0]) and _is_number(p[1]) for p in block
    ):
        errors.append(f"{context} must be a list of [start_hour, value] pairs (got {block!r})")
        return None
    return [(float(s), float(v)) for s, v in block]


def _schedules_from_block(
    block: object, context: str, count: int, horizon: float | None, errors: list[str]
) -> tuple[PiecewiseSchedule, ...] | None:
    if not isinstance(block, Mapping) or set(block) not in ({"broadcast"}, {"per_agent"}):
        errors.append(f"{context} must contain exactly one of 'broadcast' or 'per_agent'")
        return None
    if "broadcast" in block:
        points = _breakpoints_from_block(block["broadcast"], f"{context}.broadcast", errors)
        if points is None or horizon is None:  # horizon None: params block already failed
            return None
        try:
            sched = PiecewiseSchedule(tuple(points), horizon)
        except ValidationError as exc:
            errors.extend(f"{context}.broadcast: {v}" for v in exc.violations)
            return None
        return (sched,) * count
    entries = block["per_agent"]
    if not isinstance(entries, list) or len(entries) != count:
        errors.append(f"{context}.per_agent must list one breakpoint list per agent ({count} expected)")
        return None
    out: list[PiecewiseSchedule] = []
    ok = True
    for idx, entry in enumerate(entries):
        points = _breakpoints_from_block(entry, f"{context}.per_agent[{idx}]", errors)
        if points is None or horizon is None:
            ok = False
            continue
        try:
            out.append(PiecewiseSchedule(tuple(points), horizon))
        except ValidationError as exc:
            errors.extend(f"{context}.per_agent[{idx}]: {v}" for v in exc.violations)
            ok = False
    return tuple(out) if ok else None


def scenario_from_dict(doc: object) -> Scenario:
    """Build a validated scenario from a parsed document.

    Collects every violation before raising, so a broken file reports all of
    its problems at once.
    """
    if not isinstance(doc, Mapping):
        raise ScenarioParseError(f"scenario document must be a mapping (got {type(doc).__name__})")
    errors: list[str] = []

    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version must be {SCHEMA_VERSION} (got {version!r})")
    unknown = set(doc) - {"schema_version", "label", "params", "agents", "network", "schedules"}
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")

    label = doc.get("label", "")
    if not isinstance(label, str):
        errors.append(f"label must be a string (got {label!r})")
        label = ""

    # params
    params = None
    horizon = None
    raw_params = doc.get("params")
    if not isinstance(raw_params, Mapping):
        errors.append("params block is required and must be a mapping")
    else:
        unknown = set(raw_params) - set(_PARAM_KEYS)
        if unknown:
            errors.append(f"params: unknown keys {sorted(unknown)}")
        bad_types = [k for k in _PARAM_KEYS if k in raw_params and not _is_number(raw_params[k])]
        for key in bad_types:
            errors.append(f"params.{key} must be a finite number (got {raw_params[key]!r})")
        if "horizon_hours" not in raw_params:
            errors.append("params.horizon_hours is required")
        elif not bad_types and not unknown:
            try:
                params = ModelParams(**{k: float(raw_params[k]) for k in _PARAM_KEYS if k in raw_params})
                horizon = params.horizon_hours
            except ValidationError as exc:
                errors.extend(f"params: {v}" for v in exc.violations)
        if horizon is None and _is_number(raw_params.get("horizon_hours")):
            horizon = float(raw_params["horizon_hours"])  # lets schedule checks still run

    # agents
    count = None
    groups = None
    initial = None
    raw_agents = doc.get("agents")
    if not isinstance(raw_agents, Mapping):
        errors.append("agents block is required and must be a mapping")
    else:
        unknown = set(raw_agents) - {"count", "groups", "initial_dissatisfaction"}
        if unknown:
            errors.append(f"agents: unknown keys {sorted(unknown)}")
        raw_count = raw_agents.get("count")
        if not (isinstance(raw_count, int) and not isinstance(raw_count, bool) and raw_count >= 1):
            errors.append(f"agents.count must be an integer >= 1 (got {raw_count!r})")
        else:
            count = raw_count
        raw_groups = raw_agents.get("groups")
        if not isinstance(raw_groups, list) or not all(
            isinstance(g, int) and not isinstance(g, bool) for g in raw_groups
        ):
            errors.append("agents.groups must be a list of integer group ids")
        elif count is not None and len(raw_groups) != count:
            errors.append(f"agents.groups must have length {count} (got {len(raw_groups)})")
        else:
            groups = list(raw_groups)
        raw_initial = raw_agents.get("initial_dissatisfaction")
        if _is_number(raw_initial):
            raw_initial = [float(raw_initial)] * (count or 0)
        if not isinstance(raw_initial, list) or not all(_is_number(v) for v in raw_initial):
            errors.append("agents.initial_dissatisfaction must be a number or a list of numbers")
        elif count is not None and len(raw_initial) != count:
            errors.append(f"agents.initial_dissatisfaction must have length {count} (got {len(raw_initial)})")
        else:
            initial = [float(v) for v in raw_initial]
            for idx, value in enumerate(initial):
                if not 0.0 <= value <= 1.0:
                    errors.append(f"agents.initial_dissatisfaction[{idx}] = {value!r} outside [0, 1]")

    # network
    network = None
    raw_network = doc.get("network")
    if not isinstance(raw_network, Mapping) or set(raw_network) not in ({"full_within_groups"}, {"dense"}):
        errors.append("network block must contain exactly one of 'full_within_groups' or 'dense'")
    elif count is not None and groups is not None:
        try:
            if "full_within_groups" in raw_network:
                shorthand = raw_network["full_within_groups"]
                weight = shorthand.get("weight", 1.0) if isinstance(shorthand, Mapping) else None
                if not isinstance(shorthand, Mapping) or set(shorthand) - {"weight"} or not _is_number(weight):
                    errors.append("network.full_within_groups must be a mapping with an optional numeric 'weight'")
                else:
                    network = ContagionNetwork.full_within_groups(groups, float(weight))
            else:
                dense = raw_network["dense"]
                if (
                    not isinstance(dense, list)
                    or len(dense) != count
                    or not all(isinstance(row, list) and len(row) == count for row in dense)
                    or not all(_is_number(v) for row in dense for v in row)
                ):
                    errors.append(f"network.dense must be a {count} x {count} matrix of numbers")
                else:
                    network = ContagionNetwork(count, np.asarray(dense, dtype=float), np.asarray(groups))
        except ValidationError as exc:
            errors.extend(f"network: {v}" for v in exc.violations)

    # schedules
    electricity = None
    media_access = None
    raw_schedules = doc.get("schedules")
    if not isinstance(raw_schedules, Mapping) or set(raw_schedules) != {"electricity", "media_access"}:
        errors.append("schedules block must contain exactly 'electricity' and 'media_access'")
    elif count is not None:
        electricity = _schedules_from_block(
            raw_schedules["electricity"], "schedules.electricity", count, horizon, errors
        )
        media_access = _schedules_from_block(
            raw_schedules["media_access"], "schedules.media_access", count, horizon, errors
        )

    if errors:
        raise ValidationError(errors)
    assert params is not None and network is not None
    assert electricity is not None and media_access is not None and initial is not None
    return Scenario(
        params=params,
        network=network,
        electricity=electricity,
        media_access=media_access,
        initial_dissatisfaction=np.asarray(initial),
        label=label,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical on-disk form; inverse of :func:`scenario_from_dict`."""
    def sched_block(schedules: Sequence[PiecewiseSchedule]) -> dict:
        points = [[list(p) for p in s.breakpoints] for s in schedules]
        if all(p == points[0] for p in points):
            return {"broadcast": points[0]}
        return {"per_agent": points}

    return {
        "schema_version": SCHEMA_VERSION,
        "label": scenario.label,
        "params": scenario.params.as_dict(),
        "agents": {
            "count": scenario.n_agents,
            "groups": scenario.network.group_of.tolist(),
            "initial_dissatisfaction": scenario.initial_dissatisfaction.tolist(),
        },
        "network": {"dense": scenario.network.base_weights.tolist()},
        "schedules": {
            "electricity": sched_block(scenario.electricity),
            "media_access": sched_block(scenario.media_access),
        },
    }


def load_scenario(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def write_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write the canonical document; ``load_scenario`` restores it exactly."""
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def builtin_case_study(variant: str = "full_access") -> Scenario:
    """Nine agents in three areas of three, 48 hours, with a midday shedding window.

    Electricity availability is 1.0 except on hours [17, 34) where shedding
    0.5 drops it to 0.5. Media access is 1.0 throughout for ``full_access``
    and fixed at 0.5 for ``limited_access``. Everyone starts neutral at
    dissatisfaction 0.5.
    """
    if variant not in ("full_access", "limited_access"):
        raise ValidationError([f"variant must be 'full_access' or 'limited_access' (got {variant!r})"])
    horizon = 48.0
    groups = [0, 0, 0, 1, 1, 1, 2, 2, 2]
    electricity = PiecewiseSchedule(((0.0, 1.0), (17.0, 0.5), (34.0, 1.0)), horizon)
    access_level = 1.0 if variant == "full_access" else 0.5
    media = PiecewiseSchedule.constant(access_level, horizon)
    return Scenario(
        params=ModelParams(horizon_hours=horizon),
        network=ContagionNetwork.full_within_groups(groups, 1.0),
        electricity=(electricity,) * len(groups),
        media_access=(media,) * len(groups),
        initial_dissatisfaction=np.full(len(groups), 0.5),
        label=f"case-study-{variant.replace('_', '-')}",
    )


def write_results(
    result: SimulationResult, out_dir: str | Path, extra_manifest: Mapping | None = None
) -> list[Path]:
    """Write per-agent CSV, aggregate CSV, and the manifest into ``out_dir``.

    Returns the written paths. Output is byte-reproducible: fixed numeric
    formatting, sorted manifest keys, and no timestamps.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agents_path = out / "agents.csv"
    aggregates_path = out / "aggregates.csv"
    manifest_path = out / "manifest.json"

    with agents_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_hours", "agent_id", "group", "dissatisfaction", "satisfaction"])
        for t_idx in range(result.n_times):
            t = result.times[t_idx]
            for agent in range(result.n_agents):
                d = result.dissatisfaction[t_idx, agent]
                writer.writerow([_fmt(t), agent, int(result.groups[agent]), _fmt(d), _fmt(1.0 - d)])

    with aggregates_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_hours", "scope", "mean_s", "min_s", "max_s", "std_s"])
        for row in result.aggregates:
            writer.writerow(
                [
                    _fmt(row.time_hours),
                    row.scope_label,
                    _fmt(row.mean_satisfaction),
                    _fmt(row.min_satisfaction),
                    _fmt(row.max_satisfaction),
                    _fmt(row.std_satisfaction),
                ]
            )

    manifest = dict(result.manifest)
    if extra_manifest:
        manifest.update(extra_manifest)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [agents_path, aggregates_path, manifest_path]
