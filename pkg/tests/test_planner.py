"""Planner pipeline: plans, gates, extraction, validation."""

from fractions import Fraction

import pytest

from petriplan.domains import (
    OracleStatus,
    gen_counters,
    gen_delivery,
    gen_random_strips,
    gen_robot,
    oracle_reachable,
)
from petriplan.planner import (
    VALID,
    Plan,
    PlanOptions,
    PlanStatus,
    plan,
    validate_plan,
)
from petriplan.problem import BoolLit, LinCond

F = Fraction


def test_counters_two_step_plan():
    outcome = plan(gen_counters(1, 2, [2]))
    assert outcome.status is PlanStatus.PLAN
    assert outcome.plan.horizon == 2
    assert outcome.plan.linearization == ("inc_c0", "inc_c0")
    assert outcome.horizon_lower <= 2


def test_counters_out_of_bounds_gated_before_solving():
    outcome = plan(gen_counters(1, 2, [3]))
    assert outcome.status is PlanStatus.INFEASIBLE
    assert outcome.explanation.goal_index_sets == ((0,),)
    assert outcome.nodes == 0  # relaxation gate fired; no solver work


def test_goal_at_init_gives_empty_plan():
    outcome = plan(gen_counters(2, 5, [0, 0]))
    assert outcome.status is PlanStatus.PLAN
    assert outcome.plan.steps == ()
    assert outcome.plan.horizon == 0


def test_robot_plan_validates():
    outcome = plan(gen_robot(4))
    assert outcome.status is PlanStatus.PLAN
    assert validate_plan(gen_robot(4), outcome.plan) is VALID


def test_delivery_plan_matches_oracle_feasibility():
    p = gen_delivery(1, 1, 2, 1)
    outcome = plan(p)
    assert outcome.status is PlanStatus.PLAN
    assert validate_plan(p, outcome.plan) is VALID
    res = oracle_reachable(p)
    assert len(outcome.plan.linearization) >= 1
    assert outcome.plan.horizon <= res.steps  # parallel steps can be fewer


def test_resource_limit_when_horizon_capped():
    # Feasible goal needing 4 steps, capped at 2: distinct from infeasible.
    outcome = plan(gen_counters(1, 5, [4]), PlanOptions(max_horizon=2))
    assert outcome.status is PlanStatus.RESOURCE_LIMIT
    assert outcome.explanation is None


def test_infeasible_mutex_goal_explained():
    p = gen_robot(2).with_goal((BoolLit("at_0", True), BoolLit("at_1", True)))
    outcome = plan(p)
    assert outcome.status is PlanStatus.INFEASIBLE
    assert outcome.explanation.goal_index_sets == ((0, 1),)


def test_constraint_aware_planning():
    p = gen_counters(1, 5, [2])
    constrained = p.with_constraints((LinCond(((F(1), "c0"),), "<=", F(1)),))
    outcome = plan(constrained)
    assert outcome.status is PlanStatus.INFEASIBLE
    assert outcome.explanation.goal_index_sets == ((0,),)


def test_validate_rejects_bad_plans():
    p = gen_counters(1, 2, [2])
    bad = Plan((("dec_c0",),), ("dec_c0",), 1)
    verdict = validate_plan(p, bad)
    assert verdict is not VALID
    assert verdict.step == 0
    short = Plan((("inc_c0",),), ("inc_c0",), 1)
    verdict = validate_plan(p, short)
    assert verdict is not VALID
    assert verdict.step == "final"


def test_oracle_reachable_sweep_produces_validating_plans():
    checked = 0
    for seed in range(1, 40):
        p = gen_random_strips(seed, 6, 7)
        res = oracle_reachable(p)
        if res.status is not OracleStatus.REACHABLE or res.steps > 6:
            continue
        outcome = plan(p, PlanOptions(max_horizon=12))
        assert outcome.status is PlanStatus.PLAN, seed
        assert validate_plan(p, outcome.plan) is VALID, seed
        assert outcome.plan.horizon >= outcome.horizon_lower
        checked += 1
    assert checked >= 10


def test_infeasible_verdicts_confirmed_by_oracle():
    for seed in range(1, 40):
        p = gen_random_strips(seed, 6, 7)
        outcome = plan(p, PlanOptions(max_horizon=10))
        if outcome.status is PlanStatus.INFEASIBLE:
            assert oracle_reachable(p).status is OracleStatus.UNREACHABLE, seed


def test_invalid_problem_raises():
    from dataclasses import replace
    p = replace(gen_counters(1, 2, [1]), init={})
    with pytest.raises(ValueError):
        plan(p)
