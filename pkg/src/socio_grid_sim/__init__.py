"""Deterministic agent-based simulation of end-user dissatisfaction under
load shedding, with media-gated emotion contagion and a fairness-aware
shedding planner."""

from ._version import __version__
from .core_types import (
    AgentId,
    AgentState,
    ContagionNetwork,
    ModelParams,
    PiecewiseSchedule,
    Scenario,
    SimulationResult,
    ValidationError,
    schedule_value_at,
)
from .dynamics import (
    ContagionSnapshot,
    FeatureContractError,
    FeatureModel,
    compute_contagion_weights,
    compute_target,
    contagion_snapshot,
    dissatisfaction_feature_model,
    normalized_contagion_weights,
    simulate,
    social_diffusion,
    step,
    step_feature,
)
from .metrics import AggregateRow, aggregate, aggregate_trajectory
from .planner import (
    PlanInfeasibleError,
    PlanObjective,
    SheddingPlan,
    SheddingSlot,
    apply_plan,
    evaluate_plan,
    plan_from_dict,
    plan_shedding,
    plan_to_dict,
)
from .scenario_io import (
    ScenarioParseError,
    builtin_case_study,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_results,
    write_scenario,
)

__all__ = [
    "__version__",
    "AgentId",
    "AgentState",
    "AggregateRow",
    "ContagionNetwork",
    "ContagionSnapshot",
    "FeatureContractError",
    "FeatureModel",
    "ModelParams",
    "PiecewiseSchedule",
    "PlanInfeasibleError",
    "PlanObjective",
    "Scenario",
    "ScenarioParseError",
    "SheddingPlan",
    "SheddingSlot",
    "SimulationResult",
    "ValidationError",
    "aggregate",
    "aggregate_trajectory",
    "apply_plan",
    "builtin_case_study",
    "compute_contagion_weights",
    "compute_target",
    "contagion_snapshot",
    "dissatisfaction_feature_model",
    "evaluate_plan",
    "load_scenario",
    "normalized_contagion_weights",
    "plan_from_dict",
    "plan_shedding",
    "plan_to_dict",
    "scenario_from_dict",
    "scenario_to_dict",
    "schedule_value_at",
    "simulate",
    "social_diffusion",
    "step",
    "step_feature",
    "write_results",
    "write_scenario",
]
