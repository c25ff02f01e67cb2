"""Relaxed reachability, mutex invariants, and explanations."""

from fractions import Fraction

import pytest

from petriplan.domains import (
    OracleStatus,
    PairStatus,
    gen_counters,
    gen_delivery,
    gen_random_strips,
    gen_robot,
    oracle_pair_reachable,
    oracle_reachable,
)
from petriplan.lp import LpStatus, lp_feasible
from petriplan.petri import build_petri, infer_bounds
from petriplan.problem import (
    Action,
    BoolAssign,
    BoolLit,
    LinCond,
    Problem,
    StateVariable,
    VarKind,
)
from petriplan.relax import (
    GroupKind,
    MutexGroup,
    RelaxStatus,
    analyze_invariants,
    build_mutex_groups,
    build_relaxed_system,
    check_goal_reachable,
    detect_one_hot,
    explain_infeasibility,
    find_mutex_pairs,
)

F = Fraction


def system_for(problem):
    return build_relaxed_system(infer_bounds(build_petri(problem)))


def test_counters_template_structure():
    sys = system_for(gen_counters(1, 2, [2]))
    assert len(sys.flow_rows) == 1
    row = sys.flow_rows[0]
    coeffs = {v: c for c, v in row.terms}
    assert coeffs["ph:c0"] == 1
    assert coeffs["tau:inc_c0"] == -1
    assert coeffs["tau:dec_c0"] == 1
    # Numeric place: both slacks pinned to zero.
    boxes = {name: (lo, hi) for name, lo, hi in sys.variables}
    assert boxes["s+:c0"] == (F(0), F(0))
    assert boxes["s-:c0"] == (F(0), F(0))


def test_boolean_slack_zeroing_rules():
    # One action only ever sets p true: rebind-to-true possible, s- free;
    # nothing rebinds to false, s+ pinned.
    variables = (StateVariable(0, "p", VarKind.BOOLEAN),)
    actions = (Action("set", pre=(), eff=(BoolAssign("p", True),)),)
    sys = system_for(Problem(variables, actions, {"p": False}, ()))
    boxes = {name: (lo, hi) for name, lo, hi in sys.variables}
    assert boxes["s-:p"] == (F(0), None)
    assert boxes["s+:p"] == (F(0), F(0))


def test_no_transition_net_fixes_marking():
    variables = (StateVariable(0, "p", VarKind.BOOLEAN),)
    sys = system_for(Problem(variables, (), {"p": True}, ()))
    lp = sys.template()
    res = lp_feasible(lp)
    assert res.status is LpStatus.FEASIBLE
    assert res.point["ph:p"] == 1


def test_goal_out_of_box_infeasible():
    p = gen_counters(1, 2, [3])
    sys = system_for(p)
    assert check_goal_reachable(sys, p.goal) is RelaxStatus.INFEASIBLE


def test_goal_within_reach_possibly_feasible():
    p = gen_counters(1, 2, [2])
    sys = system_for(p)
    assert check_goal_reachable(sys, p.goal) is RelaxStatus.POSSIBLY_FEASIBLE


def test_soundness_on_oracle_reachable_instances():
    # Prop-1 analog: the relaxation never calls a reachable goal infeasible.
    count = 0
    for seed in range(1, 101):
        p = gen_random_strips(seed, 8, 8)
        res = oracle_reachable(p)
        if res.status is not OracleStatus.REACHABLE:
            continue
        sys = system_for(p)
        assert check_goal_reachable(sys, p.goal) is RelaxStatus.POSSIBLY_FEASIBLE
        count += 1
    assert count > 20


def test_robot_mutex_pair_found():
    p = gen_robot(2)
    sys = system_for(p)
    pairs = find_mutex_pairs(sys)
    assert ("at_0", "at_1") in pairs
    assert oracle_pair_reachable(p, "at_0", "at_1") is PairStatus.NEVER


def test_pair_settable_by_one_transition_not_emitted():
    variables = (StateVariable(0, "a", VarKind.BOOLEAN),
                 StateVariable(1, "b", VarKind.BOOLEAN))
    actions = (Action("both", pre=(), eff=(BoolAssign("a", True),
                                           BoolAssign("b", True))),)
    p = Problem(variables, actions, {"a": False, "b": False}, ())
    pairs = find_mutex_pairs(system_for(p))
    assert pairs == []


def test_emitted_pairs_are_oracle_never():
    for seed in range(1, 51):
        p = gen_random_strips(seed, 8, 8)
        sys = system_for(p)
        for u, v in find_mutex_pairs(sys):
            assert oracle_pair_reachable(p, u, v) is PairStatus.NEVER, (seed, u, v)


def test_workers_do_not_change_pair_output():
    p = gen_delivery(1, 2, 2, 1)
    sys = system_for(p)
    assert find_mutex_pairs(sys, workers=1) == find_mutex_pairs(sys, workers=4)


def test_triangle_becomes_single_group():
    net = build_petri(gen_robot(3))
    groups = build_mutex_groups([("at_0", "at_1"), ("at_1", "at_2"),
                                 ("at_0", "at_2")], net)
    assert [g.members for g in groups] == [("at_0", "at_1", "at_2")]


def test_path_pairs_stay_pairs():
    net = build_petri(gen_robot(3))
    groups = build_mutex_groups([("at_0", "at_1"), ("at_1", "at_2")], net)
    assert [g.members for g in groups] == [("at_0", "at_1"), ("at_1", "at_2")]


def test_groups_imply_exactly_the_input_pairs():
    import itertools
    for seed in range(1, 30):
        p = gen_random_strips(seed, 8, 8)
        net = infer_bounds(build_petri(p))
        sys = build_relaxed_system(net)
        pairs = find_mutex_pairs(sys)
        groups = build_mutex_groups(pairs, net)
        implied = set()
        for g in groups:
            ids = sorted(net.place_id(m) for m in g.members)
            for a, b in itertools.combinations(ids, 2):
                implied.add((net.places[a], net.places[b]))
        assert implied == set(pairs), seed


def test_one_hot_upgrade_on_robot():
    p = gen_robot(4)
    net = infer_bounds(build_petri(p))
    groups = analyze_invariants(build_relaxed_system(net))
    one_hot = [g for g in groups if g.kind is GroupKind.EXACTLY_ONE]
    assert len(one_hot) == 1
    assert one_hot[0].members == ("at_0", "at_1", "at_2", "at_3")


def test_one_hot_blocked_by_pure_disabler():
    # An action that disables a location without enabling another one.
    base = gen_robot(2)
    crash = Action("crash", pre=(BoolLit("at_0", True),),
                   eff=(BoolAssign("at_0", False),))
    p = Problem(base.variables, base.actions + (crash,), base.init, base.goal)
    net = infer_bounds(build_petri(p))
    group = MutexGroup(("at_0", "at_1"), GroupKind.AT_MOST_ONE)
    assert detect_one_hot(group, net).kind is GroupKind.AT_MOST_ONE


def test_one_hot_blocked_without_initial_truth():
    p = gen_robot(2)
    init = {"at_0": False, "at_1": False}
    q = Problem(p.variables, p.actions, init, p.goal)
    net = infer_bounds(build_petri(q))
    group = MutexGroup(("at_0", "at_1"), GroupKind.AT_MOST_ONE)
    assert detect_one_hot(group, net).kind is GroupKind.AT_MOST_ONE


# ── Explanations ──────────────────────────────────────────────────────────

def test_single_out_of_bounds_goal_explained():
    p = gen_counters(1, 2, [3])
    sys = system_for(p)
    exp = explain_infeasibility(sys, p.goal)
    assert exp.goal_index_sets == ((0,),)


def test_contradictory_pair_explained():
    p = gen_counters(1, 2, [1])
    goal = (LinCond(((F(1), "c0"),), "=", F(1)),
            LinCond(((F(1), "c0"),), "=", F(2)))
    sys = system_for(p.with_goal(goal))
    exp = explain_infeasibility(sys, goal)
    assert exp.goal_index_sets == ((0, 1),)


def test_mutex_goal_pair_explained():
    p = gen_robot(2)
    goal = (BoolLit("at_0", True), BoolLit("at_1", True))
    sys = system_for(p.with_goal(goal))
    exp = explain_infeasibility(sys, goal)
    assert exp.goal_index_sets == ((0, 1),)


def test_explanation_minimality_property():
    from petriplan.relax import _subset_infeasible
    cases = [
        gen_counters(2, 2, [3, 5]).goal,
        (LinCond(((F(1), "c0"),), "=", F(1)),
         LinCond(((F(1), "c0"),), "=", F(2)),
         LinCond(((F(1), "c1"),), "=", F(9))),
    ]
    for goal in cases:
        base = gen_counters(2, 2, [0, 0]).with_goal(goal)
        sys = system_for(base)
        exp = explain_infeasibility(sys, goal)
        assert exp.goal_index_sets
        for subset in exp.goal_index_sets:
            assert _subset_infeasible(sys, goal, subset)
            for drop in subset:
                remaining = tuple(i for i in subset if i != drop)
                assert not _subset_infeasible(sys, goal, remaining)


def test_mip_path_agrees_with_enumeration():
    goal = (LinCond(((F(1), "c0"),), "=", F(1)),
            LinCond(((F(1), "c0"),), "=", F(2)),
            LinCond(((F(1), "c1"),), "=", F(5)))
    base = gen_counters(2, 2, [0, 0]).with_goal(goal)
    sys = system_for(base)
    complete = explain_infeasibility(sys, goal)  # enumeration path
    mip = explain_infeasibility(sys, goal, threshold=0)  # force the MIP path
    assert set(mip.goal_index_sets) <= set(complete.goal_index_sets)
    assert mip.goal_index_sets  # finds at least the minimum-cardinality sets


def test_explaining_feasible_goal_rejected():
    p = gen_counters(1, 2, [2])
    sys = system_for(p)
    with pytest.raises(ValueError):
        explain_infeasibility(sys, p.goal)
