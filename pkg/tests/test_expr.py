"""Expression IR: pval, psat, nnf, and the emitters.

The random-formula oracle enumerates all assignments over the boolean
variables (and small integer grids for numeric ones), which pins down the
soundness contracts: pval preserves meaning, psat never contradicts the
truth table.
"""

import itertools
import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from petriplan.expr import (
    FALSE,
    TRUE,
    Sat,
    and_,
    at_most,
    eval_expr,
    exactly,
    free_vars,
    implies,
    linrel,
    nnf,
    not_,
    or_,
    pretty,
    psat,
    pval,
    to_smt2,
    var,
)

P, Q, R = var("p"), var("q"), var("r")


def test_constructors_fold_constants():
    assert and_(P, TRUE) is P
    assert and_(P, FALSE) is FALSE
    assert or_(P, TRUE) is TRUE
    assert or_(P, FALSE) is P
    assert not_(not_(P)) is P
    assert and_(P, not_(P)) is FALSE
    assert or_(P, not_(P)) is TRUE
    assert implies(TRUE, P) is P
    assert implies(P, FALSE) is not_(P)


def test_flattening_and_sharing():
    e1 = and_(P, and_(Q, R))
    e2 = and_(and_(P, Q), R)
    assert e1 is e2  # hash-consing makes structural equality identity


def test_pval_identity_elimination():
    e = and_(P, Q)
    assert pval(e, {"p": True}) is Q


def test_pval_constant_folding_of_relations():
    e = linrel([(Fraction(2), "c"), (Fraction(3), "d")], "<=", Fraction(10))
    got = pval(e, {"c": Fraction(2)})
    assert got is linrel([(Fraction(3), "d")], "<=", Fraction(6))


def test_pval_card_folding():
    e = at_most(["a", "b", "c"], 1)
    assert pval(e, {"a": True, "b": False}) is not_(var("c"))
    assert pval(e, {"a": True, "b": True}) is FALSE
    e2 = exactly(["a", "b"], 1)
    assert pval(e2, {"a": True}) is not_(var("b"))


def test_psat_unit_contradiction():
    assert psat(and_(P, not_(P))) is Sat.UNSAT


def test_psat_pure_literals():
    assert psat(or_(P, Q)) is Sat.SAT


def test_psat_interval_reasoning():
    rel = linrel([(Fraction(1), "x")], ">=", Fraction(5))
    boxes = {"x": (Fraction(0), Fraction(2))}
    assert psat(rel, boxes) is Sat.UNSAT
    ok = linrel([(Fraction(1), "x")], "<=", Fraction(2))
    assert psat(ok, boxes) is Sat.SAT


def test_nnf_de_morgan():
    assert nnf(not_(and_(P, Q))) is or_(not_(P), not_(Q))


def test_nnf_relation_complement_real_and_integer():
    rel = linrel([(Fraction(1), "x")], "<=", Fraction(3))
    assert nnf(not_(rel)) is linrel([(Fraction(1), "x")], ">=", Fraction(3))
    assert nnf(not_(rel), frozenset({"x"})) is linrel(
        [(Fraction(1), "x")], ">=", Fraction(4))


def test_nnf_idempotent():
    e = not_(and_(P, or_(Q, not_(R)), implies(P, Q)))
    assert nnf(nnf(e)) is nnf(e)


def test_smt2_emission():
    e = implies(P, linrel([(Fraction(1), "x"), (Fraction(-2), "y")], "<=", Fraction(3)))
    text = to_smt2(e)
    assert text == "(=> p (<= (+ x (* (- 2) y)) 3))"
    assert "at-most" in to_smt2(at_most(["a", "b"], 1))


def test_pretty_renders_relations():
    e = linrel([(Fraction(2), "c"), (Fraction(-1), "d")], ">=", Fraction(1, 2))
    assert pretty(e) == "2*c - d >= 1/2"


# ── Random-formula oracles ────────────────────────────────────────────────
#
# psat/pval soundness is pinned by exhaustive enumeration.  The boolean
# family exercises the full operator set against a truth table; the numeric
# family keeps atoms positive with unit coefficients and integral
# thresholds, so an integer grid decides them exactly.

BOOLS = ["b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7"]
NUMS = ["x", "y"]
NUM_BOX = {"x": (Fraction(0), Fraction(3)), "y": (Fraction(0), Fraction(3))}


def random_bool_formula(rng: random.Random, depth: int = 3):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.8:
            v = var(rng.choice(BOOLS))
            return v if rng.random() < 0.5 else not_(v)
        vs = rng.sample(BOOLS, rng.randint(2, 4))
        return at_most(vs, rng.randint(1, 2))
    kids = [random_bool_formula(rng, depth - 1) for _ in range(rng.randint(2, 3))]
    op = rng.random()
    if op < 0.4:
        return and_(*kids)
    if op < 0.8:
        return or_(*kids)
    if op < 0.9:
        return implies(kids[0], kids[1])
    return not_(kids[0])


def random_numeric_atom(rng: random.Random):
    name = rng.choice(NUMS)
    rhs = Fraction(rng.randint(0, 3))
    op = rng.choice(["<=", ">=", "="])
    return linrel([(Fraction(1), name)], op, rhs)


def random_mixed_formula(rng: random.Random, depth: int = 2):
    """Monotone combinations of boolean literals and positive numeric atoms."""
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.5:
            v = var(rng.choice(BOOLS[:4]))
            return v if rng.random() < 0.5 else not_(v)
        return random_numeric_atom(rng)
    kids = [random_mixed_formula(rng, depth - 1) for _ in range(rng.randint(2, 3))]
    return and_(*kids) if rng.random() < 0.5 else or_(*kids)


def enumerate_satisfiable(e) -> bool:
    names = sorted(free_vars(e))
    bool_names = [n for n in names if n not in NUMS]
    num_names = [n for n in names if n in NUMS]
    grid = [Fraction(k) for k in range(0, 4)]
    for bvals in itertools.product([False, True], repeat=len(bool_names)):
        for nvals in itertools.product(grid, repeat=len(num_names)):
            binding = dict(zip(bool_names, bvals))
            binding.update(dict(zip(num_names, nvals)))
            if eval_expr(e, binding):
                return True
    return False


def test_psat_sound_against_truth_table():
    rng = random.Random(42)
    checked_sat = checked_unsat = 0
    for i in range(300):
        e = random_bool_formula(rng)
        if i % 3 == 0:
            # Conjoin a unit implication chain so contradictions occur often.
            v, w = (var(n) for n in rng.sample(BOOLS, 2))
            e = and_(e, v, implies(v, w), w if rng.random() < 0.5 else not_(w))
        if isinstance(getattr(e, "value", None), bool):
            continue
        truth = enumerate_satisfiable(e)
        verdict = psat(e)
        if verdict is Sat.SAT:
            checked_sat += 1
            assert truth, f"psat claimed SAT on unsatisfiable {pretty(e)}"
        elif verdict is Sat.UNSAT:
            checked_unsat += 1
            assert not truth, f"psat claimed UNSAT on satisfiable {pretty(e)}"
    assert checked_sat > 5 and checked_unsat > 5


def test_psat_sound_on_mixed_monotone_formulas():
    rng = random.Random(77)
    for _ in range(200):
        e = random_mixed_formula(rng)
        if isinstance(getattr(e, "value", None), bool):
            continue
        truth = enumerate_satisfiable(e)
        verdict = psat(e, NUM_BOX)
        if verdict is Sat.SAT:
            assert truth, pretty(e)
        elif verdict is Sat.UNSAT:
            assert not truth, pretty(e)


def test_pval_total_bindings_match_direct_evaluation():
    rng = random.Random(7)
    for _ in range(200):
        e = random_mixed_formula(rng) if rng.random() < 0.5 else random_bool_formula(rng)
        names = sorted(free_vars(e))
        binding = {}
        for n in names:
            if n in NUMS:
                binding[n] = Fraction(rng.randint(0, 3))
            else:
                binding[n] = rng.random() < 0.5
        result = pval(e, binding)
        assert result in (TRUE, FALSE)
        assert result.value is eval_expr(e, binding)


def test_pval_empty_bindings_preserves_meaning():
    rng = random.Random(11)
    for _ in range(50):
        e = random_bool_formula(rng, depth=2)
        e2 = pval(e, {})
        names = sorted(free_vars(e) | free_vars(e2))
        for trial in range(30):
            sub = random.Random(trial)
            binding = {n: sub.random() < 0.5 for n in names}
            assert eval_expr(e, binding) is eval_expr(e2, binding)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_nnf_preserves_boolean_truth_tables(data):
    rng = random.Random(data.draw(st.integers(0, 10_000)))
    e = random_bool_formula(rng, depth=2)
    f = nnf(e)
    names = sorted(free_vars(e) | free_vars(f))
    binding = {n: data.draw(st.booleans()) for n in names}
    # Boolean-only formulas have exact complements (cards negate to integral
    # relation atoms over 0/1 variables), so nnf must preserve truth exactly.
    assert eval_expr(e, binding) is eval_expr(f, binding)
