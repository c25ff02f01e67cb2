"""Step encoding, the PG transform, and the MILP lowering."""

from fractions import Fraction

import pytest

from petriplan.domains import gen_counters
from petriplan.encode import (
    BIG_M_SCALE,
    UnboundedBigMError,
    clause_row,
    encode_step,
    pg_transform,
    to_milp,
    transition_conflicts,
)
from petriplan.expr import (
    and_,
    linrel,
    or_,
    pretty,
    var,
)
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

F = Fraction


def counters_net(max_val=2):
    return infer_bounds(build_petri(gen_counters(1, max_val, [max_val])))


def test_counters_step_one_assertions():
    net = counters_net()
    enc = encode_step(net, 1, constants_prev={"c0": F(0)})
    texts = [pretty(a) for a in enc.assertions]
    # Flow equation with c0@0 folded to 0: c0@1 - inc + dec = 0.
    assert any("c0@1" in t and "inc_c0@0" in t and "= 0" in t for t in texts)
    # Preconditions: dec is impossible at step 0 (c0 = 0), inc is free.
    assert any(t == "!dec_c0@0" for t in texts)
    # Conflict mutex between inc and dec.
    assert any("atmost(1;" in t and "dec_c0@0" in t and "inc_c0@0" in t
               for t in texts)


def test_counters_transitions_conflict():
    net = counters_net()
    assert transition_conflicts(net) == {(0, 1)}


def test_boolean_flow_implications():
    variables = (StateVariable(0, "p", VarKind.BOOLEAN),)
    actions = (
        Action("set", pre=(), eff=(BoolAssign("p", True),)),
        Action("unset", pre=(BoolLit("p", True),), eff=(BoolAssign("p", False),)),
        Action("watch", pre=(BoolLit("p", True),), eff=()),
    )
    p = Problem(variables, actions, {"p": False}, ())
    net = build_petri(p)
    enc = encode_step(net, 1)
    texts = {pretty(a) for a in enc.assertions}
    assert "(set@0 -> p@1)" in texts
    assert "(unset@0 -> (p@0 & !p@1))" in texts
    assert "(watch@0 -> (p@0 & p@1))" in texts
    # Frame axioms: a change implies an adjacent setter fired.
    assert "(!p@1 | p@0 | set@0)" in texts
    assert "(p@1 | !p@0 | unset@0)" in texts


def test_constants_substitution_removes_declarations():
    net = counters_net()
    enc = encode_step(net, 1, constants_prev={"c0": F(0)}, constants_cur={})
    declared = {d[0] for d in enc.declarations}
    assert "c0@0" not in declared
    assert "c0@1" in declared and "inc_c0@0" in declared


def test_invariant_and_extra_constraint_assertions():
    net = counters_net()
    from petriplan.relax import GroupKind, MutexGroup
    group = MutexGroup(("c0",), GroupKind.AT_MOST_ONE)  # degenerate but legal
    extra = (LinCond(((F(1), "c0"),), "<=", F(1)),)
    enc = encode_step(net, 2, invariants=(), extra_constraints=extra)
    texts = [pretty(a) for a in enc.assertions]
    assert any(t == "c0@2 <= 1" for t in texts)


# ── PG transform ──────────────────────────────────────────────────────────

def test_pg_top_level_conjunction_inlines():
    res = pg_transform(and_(var("p"), var("q")))
    assert res.clauses == [(("p", True),), (("q", True),)]
    assert res.aux_vars == []


def test_pg_single_internal_disjunct_folds():
    res = pg_transform(or_(var("p"), and_(var("q"), var("r"))))
    assert sorted(res.clauses) == [(("p", True), ("q", True)),
                                   (("p", True), ("r", True))]
    assert res.aux_vars == []


def test_pg_relation_atom_gets_indicator():
    e = or_(linrel([(F(1), "x")], "<=", F(3)), var("p"))
    res = pg_transform(e)
    assert len(res.aux_vars) == 1
    aux = res.aux_vars[0]
    assert res.clauses == [((aux, True), ("p", True))]
    assert res.indicators[0][0] == aux
    assert res.indicators[0][1].op == "<="


def test_pg_two_internal_disjuncts_need_auxes():
    e = or_(and_(var("a"), var("b")), and_(var("c"), var("d")))
    res = pg_transform(e)
    assert len(res.aux_vars) == 2
    assert len(res.clauses) == 5  # 2 + 2 definitions + 1 top clause


def test_pg_equisatisfiable_on_random_formulas():
    import itertools
    import random

    from petriplan.expr import eval_expr, free_vars
    from tests.test_expr import random_bool_formula

    rng = random.Random(13)
    for _ in range(150):
        e = random_bool_formula(rng, depth=3)
        if not free_vars(e):
            continue
        res = pg_transform(e)
        names = sorted(free_vars(e))
        orig_sat = any(
            eval_expr(e, dict(zip(names, bits)))
            for bits in itertools.product([False, True], repeat=len(names)))
        all_names = names + res.aux_vars
        def clauses_hold(assignment):
            for clause in res.clauses:
                if not any(assignment[n] is pos for n, pos in clause):
                    return False
            # Cards/relations over booleans: interpret indicator payloads.
            for aux, row in res.indicators:
                if assignment[aux]:
                    total = sum(F(1) for c, v in row.terms if assignment[v])
                    ok = (total <= row.rhs if row.op == "<=" else
                          total >= row.rhs if row.op == ">=" else total == row.rhs)
                    if not ok:
                        return False
            return True
        pg_sat = any(
            clauses_hold(dict(zip(all_names, bits)))
            for bits in itertools.product([False, True], repeat=len(all_names)))
        assert pg_sat == orig_sat, pretty(e)


# ── MILP lowering ─────────────────────────────────────────────────────────

def test_clause_row_mixed_polarity():
    row = clause_row((("p", True), ("q", False)))
    assert row.op == ">=" and row.rhs == 0
    assert dict((v, c) for c, v in row.terms) == {"p": F(1), "q": F(-1)}


def test_big_m_value_matches_scale_two():
    e = or_(linrel([(F(1), "x")], "<=", F(3)), var("p"))
    res = pg_transform(e)
    boxes = {"x": (F(0), F(10)), "p": (F(0), F(1))}
    for aux in res.aux_vars:
        boxes[aux] = (F(0), F(1))
    milp = to_milp(res, boxes, mode="big_m")
    aux = res.aux_vars[0]
    big_m_rows = [r for r in milp.rows
                  if any(v == aux for _, v in r.terms)
                  and any(v == "x" for _, v in r.terms)]
    assert len(big_m_rows) == 1
    row = big_m_rows[0]
    coeffs = dict((v, c) for c, v in row.terms)
    assert BIG_M_SCALE == 2
    assert coeffs[aux] == F(14)  # 2 * (10 - 3)
    assert row.op == "<=" and row.rhs == F(17)


def test_big_m_unbounded_box_raises():
    e = or_(linrel([(F(1), "x")], "<=", F(3)), var("p"))
    res = pg_transform(e)
    boxes = {"x": (F(0), None), "p": (F(0), F(1))}
    for aux in res.aux_vars:
        boxes[aux] = (F(0), F(1))
    with pytest.raises(UnboundedBigMError) as err:
        to_milp(res, boxes, mode="big_m")
    assert err.value.variable == "x"


def test_indicator_mode_keeps_rows_native():
    e = or_(linrel([(F(1), "x")], "<=", F(3)), var("p"))
    res = pg_transform(e)
    milp = to_milp(res, {}, mode="indicator")
    assert len(milp.indicator_rows) == 1
    guard, when, row = milp.indicator_rows[0]
    assert when is True and row.op == "<="
