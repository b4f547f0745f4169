from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socio_grid_sim import FeatureModel, step_feature

import property_checks as props
from oracles import random_scenario

unit = st.floats(0.0, 1.0)


@given(
    d=st.lists(unit, min_size=1, max_size=8),
    rate=st.lists(unit, min_size=8, max_size=8),
    target=st.lists(unit, min_size=8, max_size=8),
    dt=st.floats(0.001, 1.0),
)
@settings(max_examples=300)
def test_convex_step_stays_in_unit_interval(d, rate, target, dt):
    d = np.asarray(d)
    n = d.size
    rate = np.asarray(rate[:n])
    target = np.asarray(target[:n])
    nxt = d + rate * (target - d) * dt
    assert np.all(nxt >= 0.0) and np.all(nxt <= 1.0)


@given(
    state=st.lists(unit, min_size=1, max_size=6),
    local=unit,
    social=unit,
    omega1=unit,
    dt=st.floats(0.001, 1.0),
)
@settings(max_examples=300)
def test_step_feature_stays_in_unit_interval(state, local, social, omega1, dt):
    omega2 = 1.0 - omega1
    model = FeatureModel(local_term=lambda c, p, s: local, social_term=lambda f, w: social)
    state = np.asarray(state)
    n = state.size
    nxt = step_feature(model, state, state, state, np.zeros((n, n)), omega1, omega2, dt)
    assert np.all(nxt >= 0.0) and np.all(nxt <= 1.0)


@pytest.mark.parametrize("seed", range(40))
def test_simulation_invariants_on_random_scenarios(seed):
    rng = np.random.default_rng(1000 + seed)
    scenario = random_scenario(rng, max_horizon=40.0)
    props.check_boundedness_without_clamp(scenario)
    props.check_scale_invariance(scenario, rng)
    props.check_permutation_equivariance(scenario, rng)
    props.check_target_monotonicity(scenario, rng)

    blocked = random_scenario(rng, max_horizon=40.0, cross_group_weights=False)
    props.check_group_isolation(blocked)
    props.check_absorbing_zero(blocked, rng)


def test_rate_floor_scenarios_stay_bounded():
    for seed in range(10):
        rng = np.random.default_rng(2000 + seed)
        scenario = random_scenario(rng, max_horizon=30.0, rate_floor=float(rng.uniform(0.0, 1.0)))
        props.check_boundedness_without_clamp(scenario)
