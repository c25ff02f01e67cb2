"""Bounded-horizon constraint construction and expression-to-MILP lowering.

Step encoding (linking step k-1 to step k):

* numeric places get the token-flow equation
  p@k = p@k-1 + sum(w_in * t@k-1) - sum(w_out * t@k-1);
* boolean places get per-arc implications: a precondition-only arc asserts
  the polarity at both steps, an effect-only arc asserts the assigned value
  at step k, and a flip arc asserts the old value at k-1 and the new one at
  k.  Explanatory frame axioms close the loop: a value change implies some
  adjacent changer fired;
* numeric preconditions attach to the firing variable at the pre-step;
* conflicting transitions are excluded from firing together via cardinality
  rows over greedy conflict cliques (leftover edges pairwise);
* invariant groups and added global constraints are asserted at step k.

Transitions conflict when one's effect can falsify the other's
precondition: a boolean effect opposite to a required polarity, any
numeric effect on a place another transition guards numerically, and
opposite-sign numeric effects on a shared place (which could transiently
leave the box).  Conservative by construction.

The lowering is a Plaisted-Greenbaum-style transform keeping only the
aux-implies-subformula direction, with two eliminations: conjunction
members inline into their guard, and a disjunction over a single internal
child folds its literals into the child's guard.  Relation atoms become
fresh binaries with indicator records, which translate either natively or
through big-M rows with M = 2 * (interval upper bound - rhs).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .expr import (
    Box,
    CardAtMost,
    CardExactly,
    Const,
    Expr,
    LinRel,
    Not,
    Or,
    And,
    VarRef,
    and_,
    at_most,
    exactly,
    implies,
    linrel,
    nnf,
    not_,
    or_,
    pval,
    var,
)
from .lp import LinRow
from .petri import ArcKind, PetriNet
from .problem import BoolLit, Condition, VarKind
from .relax import GroupKind, MutexGroup

BIG_M_SCALE = Fraction(2)

Lit = tuple[str, bool]


def step_name(name: str, k: int) -> str:
    return f"{name}@{k}"


def condition_expr(cond: Condition, k: int) -> Expr:
    if isinstance(cond, BoolLit):
        v = var(step_name(cond.var, k))
        return v if cond.polarity else not_(v)
    return linrel(((c, step_name(n, k)) for c, n in cond.terms), cond.op, cond.rhs)


# ── Transition conflicts ──────────────────────────────────────────────────

def transition_conflicts(net: PetriNet) -> set[tuple[int, int]]:
    """Unordered pairs that must not fire in the same step."""
    problem = net.problem
    n = len(net.transitions)
    bool_eff: list[dict[int, bool]] = [{} for _ in range(n)]
    num_eff: list[dict[int, Fraction]] = [{} for _ in range(n)]
    bool_pre: list[dict[int, set[bool]]] = [{} for _ in range(n)]
    num_pre: list[set[int]] = [set() for _ in range(n)]
    for arc in net.arcs:
        j = arc.transition
        if arc.kind is ArcKind.EFF_ONLY:
            if arc.bool_value is not None:
                bool_eff[j][arc.place] = arc.bool_value
            else:
                num_eff[j][arc.place] = arc.delta
        elif arc.kind is ArcKind.PRE_AND_EFF:
            bool_eff[j][arc.place] = arc.flip_to
            bool_pre[j].setdefault(arc.place, set()).add(not arc.flip_to)
        elif arc.cond is not None:
            num_pre[j].add(arc.place)
        else:
            bool_pre[j].setdefault(arc.place, set()).add(arc.polarity)

    conflicts: set[tuple[int, int]] = set()
    for t, u in itertools.combinations(range(n), 2):
        clash = False
        for a, b in ((t, u), (u, t)):
            for place, value in bool_eff[a].items():
                if (not value) in bool_pre[b].get(place, set()):
                    clash = True
            for place in num_eff[a]:
                if place in num_pre[b]:
                    clash = True
        for place, delta in num_eff[t].items():
            other = num_eff[u].get(place)
            if other is not None and (delta > 0) != (other > 0):
                clash = True
        if clash:
            conflicts.add((t, u))
    return conflicts


def _clique_cover(vertices: set[int], edges: set[tuple[int, int]]):
    adj: dict[int, set[int]] = {v: set() for v in vertices}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    cliques: list[list[int]] = []
    unassigned = {v for v in vertices if adj[v]}
    while unassigned:
        seed = min(unassigned)
        members = [seed]
        while True:
            shared = set.intersection(*(adj[m] for m in members)) - set(members)
            if not shared:
                break
            members.append(min(shared))
        members.sort()
        if len(members) > 1:
            cliques.append(members)
        unassigned -= set(members)
    covered = {tuple(sorted(p)) for c in cliques
               for p in itertools.combinations(c, 2)}
    leftover = sorted(e for e in edges if tuple(sorted(e)) not in covered)
    return cliques, leftover


# ── Step encoding ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class StepEncoding:
    step: int
    place_vars: dict[str, str | None]  # None when bound to a constant
    trans_vars: dict[str, str]
    constants: dict[str, bool | Fraction]  # stepped name -> substituted value
    declarations: tuple[tuple[str, str, Fraction | None, Fraction | None], ...]
    assertions: tuple[Expr, ...]


def encode_step(net: PetriNet, k: int,
                invariants: Iterable[MutexGroup] = (),
                extra_constraints: Iterable[Condition] = (),
                constants_prev: Mapping[str, bool | Fraction] | None = None,
                constants_cur: Mapping[str, bool | Fraction] | None = None) -> StepEncoding:
    """All assertions linking steps k-1 and k, plus step-k state constraints.

    Forward-reachability constants for the two steps are substituted, so no
    decision variable is declared for a place with a known binding.
    """
    if k < 1:
        raise ValueError("steps are encoded from k = 1")
    problem = net.problem
    constants_prev = constants_prev or {}
    constants_cur = constants_cur or {}

    stepped_constants: dict[str, bool | Fraction] = {}
    for name, value in constants_prev.items():
        stepped_constants[step_name(name, k - 1)] = value
    for name, value in constants_cur.items():
        stepped_constants[step_name(name, k)] = value

    assertions: list[Expr] = []

    def lit(place: str, step: int, polarity: bool) -> Expr:
        v = var(step_name(place, step))
        return v if polarity else not_(v)

    # Per-transition implications from the classified arcs.
    seen_conds: dict[int, set] = {}
    for arc in net.arcs:
        t = var(step_name(net.transitions[arc.transition], k - 1))
        place = net.places[arc.place]
        if arc.kind is ArcKind.PRE_ONLY and arc.cond is not None:
            if arc.cond in seen_conds.setdefault(arc.transition, set()):
                continue
            seen_conds[arc.transition].add(arc.cond)
            assertions.append(implies(t, condition_expr(arc.cond, k - 1)))
        elif arc.kind is ArcKind.PRE_ONLY:
            assertions.append(implies(t, and_(lit(place, k - 1, arc.polarity),
                                              lit(place, k, arc.polarity))))
        elif arc.kind is ArcKind.PRE_AND_EFF:
            assertions.append(implies(t, and_(lit(place, k - 1, not arc.flip_to),
                                              lit(place, k, arc.flip_to))))
        elif arc.bool_value is not None:
            assertions.append(implies(t, lit(place, k, arc.bool_value)))

    # Flow equations and frame axioms.
    setters: dict[tuple[int, bool], list[str]] = {}
    for arc in net.arcs:
        value = arc.bool_value if arc.bool_value is not None else arc.flip_to
        if value is not None:
            setters.setdefault((arc.place, value), []).append(
                net.transitions[arc.transition])
    for v in problem.variables:
        i = v.id
        name = v.name
        if v.kind is VarKind.BOOLEAN:
            true_setters = [var(step_name(t, k - 1)) for t in setters.get((i, True), [])]
            false_setters = [var(step_name(t, k - 1)) for t in setters.get((i, False), [])]
            assertions.append(or_(not_(var(step_name(name, k))),
                                  var(step_name(name, k - 1)), *true_setters))
            assertions.append(or_(var(step_name(name, k)),
                                  not_(var(step_name(name, k - 1))), *false_setters))
        else:
            terms: list[tuple[Fraction, str]] = [
                (Fraction(1), step_name(name, k)),
                (Fraction(-1), step_name(name, k - 1)),
            ]
            for j, tname in enumerate(net.transitions):
                w = net.incidence.get((i, j))
                if w is not None:
                    terms.append((-w, step_name(tname, k - 1)))
            assertions.append(linrel(terms, "=", Fraction(0)))

    # Conflict exclusion over transitions firing at k-1.
    conflicts = transition_conflicts(net)
    cliques, leftover = _clique_cover(set(range(len(net.transitions))), conflicts)
    for clique in cliques:
        assertions.append(at_most(
            (step_name(net.transitions[j], k - 1) for j in clique), 1))
    for t_id, u_id in leftover:
        assertions.append(at_most((step_name(net.transitions[t_id], k - 1),
                                   step_name(net.transitions[u_id], k - 1)), 1))

    # Invariants and global constraints hold at step k.
    for group in invariants:
        members = (step_name(m, k) for m in group.members)
        if group.kind is GroupKind.EXACTLY_ONE:
            assertions.append(exactly(members, 1))
        else:
            assertions.append(at_most(members, 1))
    for cond in extra_constraints:
        assertions.append(condition_expr(cond, k))

    folded_list = []
    for e in assertions:
        a = pval(e, stepped_constants) if stepped_constants else e
        if isinstance(a, Const) and a.value is True:
            continue
        folded_list.append(a)
    folded = tuple(folded_list)

    place_vars: dict[str, str | None] = {}
    declarations: list[tuple[str, str, Fraction | None, Fraction | None]] = []
    for v in problem.variables:
        if v.name in constants_cur:
            place_vars[v.name] = None
            continue
        sname = step_name(v.name, k)
        place_vars[v.name] = sname
        if v.kind is VarKind.BOOLEAN:
            declarations.append((sname, "bool", None, None))
        else:
            lo, hi = net.bounds[v.id]
            kind = "int" if v.kind is VarKind.INTEGER else "real"
            declarations.append((sname, kind, lo, hi))
    trans_vars: dict[str, str] = {}
    for tname in net.transitions:
        sname = step_name(tname, k - 1)
        trans_vars[tname] = sname
        declarations.append((sname, "bool", None, None))

    return StepEncoding(
        step=k,
        place_vars=place_vars,
        trans_vars=trans_vars,
        constants=stepped_constants,
        declarations=tuple(declarations),
        assertions=folded,
    )


# ── Plaisted-Greenbaum transform ──────────────────────────────────────────

@dataclass
class PgResult:
    clauses: list[tuple[Lit, ...]]
    indicators: list[tuple[str, LinRow]]  # aux true implies the row
    aux_vars: list[str]


def pg_transform(e: Expr, gensym: Callable[[], str] | None = None) -> PgResult:
    """Equisatisfiable clause set with one-directional aux definitions."""
    counter = itertools.count()
    fresh = gensym or (lambda: f"aux{next(counter)}")
    result = PgResult([], [], [])
    atom_aux: dict[int, str] = {}
    node_aux: dict[int, str] = {}

    def card_row(node) -> LinRow:
        terms = tuple((Fraction(1), v) for v in node.vars)
        if isinstance(node, CardAtMost):
            return LinRow(terms, "<=", Fraction(node.k))
        return LinRow(terms, "=", Fraction(node.k))

    def atom_literal(node: Expr) -> Lit:
        if isinstance(node, VarRef):
            return (node.name, True)
        if isinstance(node, Not) and isinstance(node.child, VarRef):
            return (node.child.name, False)
        aux = atom_aux.get(id(node))
        if aux is None:
            aux = fresh()
            atom_aux[id(node)] = aux
            result.aux_vars.append(aux)
            if isinstance(node, LinRel):
                result.indicators.append((aux, LinRow(node.terms, node.op, node.rhs)))
            else:
                result.indicators.append((aux, card_row(node)))
        return (aux, True)

    def is_atom(node: Expr) -> bool:
        return isinstance(node, (VarRef, LinRel, CardAtMost, CardExactly)) or (
            isinstance(node, Not) and isinstance(node.child, VarRef))

    def emit(guard: tuple[Lit, ...], node: Expr) -> None:
        """Assert guard-disjunction or node."""
        if isinstance(node, Const):
            if node.value is False:
                result.clauses.append(guard)
            return
        if is_atom(node):
            result.clauses.append(guard + (atom_literal(node),))
            return
        if isinstance(node, And):
            for child in node.children:
                emit(guard, child)
            return
        if isinstance(node, Or):
            literals: list[Lit] = []
            internal: list[Expr] = []
            for child in node.children:
                if is_atom(child):
                    literals.append(atom_literal(child))
                else:
                    internal.append(child)
            if not internal:
                result.clauses.append(guard + tuple(literals))
            elif len(internal) == 1:
                emit(guard + tuple(literals), internal[0])
            else:
                for child in internal:
                    aux = node_aux.get(id(child))
                    if aux is None:
                        aux = fresh()
                        node_aux[id(child)] = aux
                        result.aux_vars.append(aux)
                        emit(((aux, False),), child)
                    literals.append((aux, True))
                result.clauses.append(guard + tuple(literals))
            return
        raise TypeError(f"pg_transform expects NNF input, got {type(node).__name__}")

    emit((), nnf(e))
    return result


# ── MILP translation ──────────────────────────────────────────────────────

class UnboundedBigMError(Exception):
    def __init__(self, variable: str):
        self.variable = variable
        super().__init__(f"big-M mode needs a finite box for {variable!r}")


@dataclass
class MilpConstraintSet:
    variables: dict[str, tuple[str, Fraction | None, Fraction | None]] = field(
        default_factory=dict)
    rows: list[LinRow] = field(default_factory=list)
    indicator_rows: list[tuple[str, bool, LinRow]] = field(default_factory=list)
    objective: tuple[str, dict[str, Fraction]] | None = None


def clause_row(clause: tuple[Lit, ...]) -> LinRow:
    """sum(pos) + sum(1 - neg) >= 1 over binaries."""
    terms = []
    negatives = 0
    for name, positive in clause:
        if positive:
            terms.append((Fraction(1), name))
        else:
            terms.append((Fraction(-1), name))
            negatives += 1
    return LinRow(tuple(terms), ">=", Fraction(1 - negatives))


def _interval_max(terms, boxes: Mapping[str, Box]) -> tuple[Fraction | None, str | None]:
    total = Fraction(0)
    for coeff, name in terms:
        lo, hi = boxes.get(name, (None, None))
        bound = hi if coeff > 0 else lo
        if bound is None:
            return None, name
        total += coeff * bound
    return total, None


def _big_m_rows(guard: str, row: LinRow, boxes: Mapping[str, Box]) -> list[LinRow]:
    """guard = 1 enforces the row; guard = 0 leaves box-feasible slack."""
    out: list[LinRow] = []
    directions = []
    if row.op in ("<=", "="):
        directions.append((row.terms, row.rhs))
    if row.op in (">=", "="):
        directions.append((tuple((-c, v) for c, v in row.terms), -row.rhs))
    for terms, rhs in directions:
        upper, offender = _interval_max(terms, boxes)
        if upper is None:
            raise UnboundedBigMError(offender)
        if upper <= rhs:
            continue  # relation holds everywhere in the box
        m = BIG_M_SCALE * (upper - rhs)
        out.append(LinRow(terms + ((m, guard),), "<=", rhs + m))
    return out


def to_milp(pg: PgResult, boxes: Mapping[str, Box], mode: str = "indicator",
            ) -> MilpConstraintSet:
    """Lower clauses and indicator records to rows.

    mode "indicator" keeps guarded rows native (the built-in solver branches
    on guards); mode "big_m" rewrites them with interval-derived M values.
    """
    if mode not in ("indicator", "big_m"):
        raise ValueError(f"unknown mode {mode!r}")
    out = MilpConstraintSet()
    for name in pg.aux_vars:
        out.variables[name] = ("bool", Fraction(0), Fraction(1))
    for clause in pg.clauses:
        out.rows.append(clause_row(clause))
    for guard, row in pg.indicators:
        if mode == "indicator":
            out.indicator_rows.append((guard, True, row))
        else:
            out.rows.extend(_big_m_rows(guard, row, boxes))
    return out
