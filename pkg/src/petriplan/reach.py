"""Per-step reachable-set propagation, constants, and the horizon bound.

Reachable sets are optimistic: a binding at step k means every state
reachable at that step agrees with it; states satisfying all bindings are
only possibly reachable.  Propagation alternates two rules to a fixpoint:

* transition disabling: a transition whose precondition partially
  evaluates to UNSAT under the step's bindings cannot fire there;
* binding persistence: a bound place whose update relation conjoined with
  "the value changes" is UNSAT keeps its value at the next step.

Both rules run through pval/psat, so they stay polynomial and may leave
variables unbound rather than search.  Backward propagation swaps the use
of preconditions and effects and starts from the goal's forced bindings;
its step index counts distance from the goal.

Bindings hold definite values only (no interval or set tracking), which
keeps the horizon lower bound conservative: it is the max of the first
forward step consistent with the goal and the first backward step
consistent with the start.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .expr import (
    Box,
    Expr,
    Sat,
    and_,
    linrel,
    not_,
    or_,
    psat,
    pval,
    var,
)
from .petri import ArcKind, PetriNet
from .problem import BoolLit, Condition, LinCond, VarKind

DEFAULT_MAX_STEPS = 64

PRE = "'pre"
POST = "'post"


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class StepBindings:
    places: dict[str, bool | Fraction]
    disabled: frozenset[str]  # transitions that cannot fire at this step

    def as_bindings(self) -> dict[str, bool | Fraction]:
        out: dict[str, bool | Fraction] = dict(self.places)
        for t in self.disabled:
            out[t] = False
        return out


@dataclass(frozen=True)
class ReachableSets:
    direction: Direction
    per_step: tuple[StepBindings, ...]
    fixpoint_step: int

    def at(self, k: int) -> StepBindings:
        return self.per_step[min(k, self.fixpoint_step)]


def _condition_to_expr(cond: Condition, suffix: str = "") -> Expr:
    if isinstance(cond, BoolLit):
        v = var(cond.var + suffix)
        return v if cond.polarity else not_(v)
    return linrel(((c, n + suffix) for c, n in cond.terms), cond.op, cond.rhs)


def _boxes(net: PetriNet, suffixes: tuple[str, ...]) -> dict[str, Box]:
    out: dict[str, Box] = {}
    for i, name in enumerate(net.places):
        for suffix in suffixes:
            out[name + suffix] = net.bounds[i]
    return out


def _value_change_expr(net: PetriNet, place: int, bound_value,
                       changed_side: str) -> Expr:
    """Flow/implication formula for one place conjoined with "value differs".

    Variables: p'pre/p'post for the place, transition names for firings.
    Built from the same arc semantics as the step encoding, restricted to
    the single place, so pval/psat can decide persistence.  changed_side
    names the unknown step: POST when propagating forward from a bound pre
    value, PRE when propagating backward from a bound arrival value.
    """
    problem = net.problem
    v = problem.variables[place]
    name = v.name
    parts: list[Expr] = []
    if v.kind is VarKind.BOOLEAN:
        setters_true: list[Expr] = []
        setters_false: list[Expr] = []
        for arc in net.arcs:
            if arc.place != place:
                continue
            t = var(net.transitions[arc.transition])
            target = arc.bool_value if arc.bool_value is not None else arc.flip_to
            if arc.kind is ArcKind.PRE_ONLY:
                pol = arc.polarity
                if arc.cond is None:
                    parts.append(or_(not_(t),
                                     and_(_lit(name + PRE, pol),
                                          _lit(name + POST, pol))))
            elif arc.kind is ArcKind.PRE_AND_EFF:
                parts.append(or_(not_(t),
                                 and_(_lit(name + PRE, not target),
                                      _lit(name + POST, target))))
                (setters_true if target else setters_false).append(t)
            elif target is not None:
                parts.append(or_(not_(t), _lit(name + POST, target)))
                (setters_true if target else setters_false).append(t)
        parts.append(or_(not_(var(name + POST)), var(name + PRE), *setters_true))
        parts.append(or_(var(name + POST), not_(var(name + PRE)), *setters_false))
        changed = or_(and_(var(name + PRE), not_(var(name + POST))),
                      and_(not_(var(name + PRE)), var(name + POST)))
    else:
        terms: list[tuple[Fraction, str]] = [(Fraction(1), name + POST),
                                             (Fraction(-1), name + PRE)]
        for j, tname in enumerate(net.transitions):
            w = net.incidence.get((place, j))
            if w is not None:
                terms.append((-w, tname))
        parts.append(linrel(terms, "=", Fraction(0)))
        changed = not_(linrel([(Fraction(1), name + changed_side)], "=",
                              Fraction(bound_value)))
    return and_(*parts, changed)


def _lit(name: str, polarity: bool) -> Expr:
    v = var(name)
    return v if polarity else not_(v)


def propagate(net: PetriNet, direction: Direction,
              max_steps: int = DEFAULT_MAX_STEPS,
              extra_constraints: tuple[Condition, ...] = ()) -> ReachableSets:
    """Iterate disabling and persistence to a fixpoint or max_steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if direction is Direction.FORWARD:
        start = dict(net.init_marking)
    else:
        start = _goal_forced_bindings(net)

    steps: list[StepBindings] = []
    places = start
    boxes = _boxes(net, ("", PRE, POST))
    constraints = and_(*(_condition_to_expr(c) for c in extra_constraints))

    for _ in range(max_steps + 1):
        disabled = _disabled_transitions(net, direction, places, boxes, constraints)
        current = StepBindings(places=places, disabled=disabled)
        if steps and steps[-1] == current:
            return ReachableSets(direction, tuple(steps), len(steps) - 1)
        steps.append(current)
        places = _persisted_bindings(net, direction, current, boxes)
    # No fixpoint inside the window: cap at the last computed step.
    return ReachableSets(direction, tuple(steps), len(steps) - 1)


def _goal_forced_bindings(net: PetriNet) -> dict[str, bool | Fraction]:
    """Bindings every goal state must satisfy (literals and pinned equalities)."""
    out: dict[str, bool | Fraction] = {}
    for cond in net.goal_marking:
        if isinstance(cond, BoolLit):
            out[cond.var] = cond.polarity
        elif isinstance(cond, LinCond) and cond.op == "=" and len(cond.terms) == 1:
            coeff, name = cond.terms[0]
            out[name] = cond.rhs / coeff
    return out


def _disabled_transitions(net: PetriNet, direction: Direction,
                          places: dict[str, bool | Fraction],
                          boxes, constraints: Expr) -> frozenset[str]:
    problem = net.problem
    disabled = []
    for j, action in enumerate(problem.actions):
        if direction is Direction.FORWARD:
            formula = and_(*(_condition_to_expr(c) for c in action.pre),
                           constraints)
            bindings = places
        else:
            # Arriving at a state with the current bindings: boolean effect
            # conclusions pin post values, precondition-only arcs pin the
            # polarity at both steps (mirroring the step encoding), and
            # numeric preconditions constrain the pre state.  Numeric delta
            # links are omitted: co-firing transitions can cancel on a
            # shared place, so per-transition delta pinning would prune
            # states parallel plans can actually use.
            parts: list[Expr] = [
                _condition_to_expr(c, PRE) for c in action.pre]
            for arc in net.arcs:
                if arc.transition != j:
                    continue
                name = net.places[arc.place]
                if arc.kind is ArcKind.EFF_ONLY and arc.bool_value is not None:
                    parts.append(_lit(name + POST, arc.bool_value))
                elif arc.kind is ArcKind.PRE_AND_EFF:
                    parts.append(_lit(name + PRE, not arc.flip_to))
                    parts.append(_lit(name + POST, arc.flip_to))
                elif arc.kind is ArcKind.PRE_ONLY and arc.cond is None:
                    parts.append(_lit(name + POST, arc.polarity))
            formula = and_(*parts)
            bindings = {name + POST: value for name, value in places.items()}
        residual = pval(formula, bindings)
        if psat(residual, boxes) is Sat.UNSAT:
            disabled.append(problem.actions[j].name)
    return frozenset(disabled)


def _persisted_bindings(net: PetriNet, direction: Direction,
                        step: StepBindings, boxes) -> dict[str, bool | Fraction]:
    problem = net.problem
    out: dict[str, bool | Fraction] = {}
    tau_bindings: dict[str, bool | Fraction] = {t: False for t in step.disabled}
    for name, value in step.places.items():
        place = problem.var(name).id
        if direction is Direction.BACKWARD:
            # The known binding is the arrival side; persistence asks
            # whether the source side could have differed.
            formula = _value_change_expr(net, place, value, changed_side=PRE)
            known = {name + POST: value}
        else:
            formula = _value_change_expr(net, place, value, changed_side=POST)
            known = {name + PRE: value}
        bindings = dict(tau_bindings)
        bindings.update(known)
        residual = pval(formula, bindings)
        if psat(residual, boxes) is Sat.UNSAT:
            out[name] = value
    return out


def constants(fwd: ReachableSets) -> dict[str, bool | Fraction]:
    """Bindings at the forward fixpoint are constants for all steps."""
    if fwd.direction is not Direction.FORWARD:
        raise ValueError("constants need the forward direction")
    return dict(fwd.per_step[fwd.fixpoint_step].places)


def consistent(bindings: dict[str, bool | Fraction],
               conditions: tuple[Condition, ...], boxes) -> bool:
    """psat-based consistency: not definitively UNSAT under the bindings."""
    formula = and_(*(_condition_to_expr(c) for c in conditions))
    return psat(pval(formula, bindings), boxes) is not Sat.UNSAT


def horizon_lower_bound(fwd: ReachableSets, bwd: ReachableSets,
                        net: PetriNet) -> int:
    """max(first forward step consistent with goal,
           first backward step consistent with init)."""
    problem = net.problem
    boxes = _boxes(net, ("",))
    goal = net.goal_marking
    kf = None
    for k in range(fwd.fixpoint_step + 1):
        if consistent(fwd.per_step[k].places, goal, boxes):
            kf = k
            break
    init_conditions = tuple(
        BoolLit(v.name, problem.init[v.name]) if v.kind is VarKind.BOOLEAN
        else LinCond(((Fraction(1), v.name),), "=", problem.init[v.name])
        for v in problem.variables)
    kb = None
    for k in range(bwd.fixpoint_step + 1):
        if consistent(bwd.per_step[k].places, init_conditions, boxes):
            kb = k
            break
    window = max(fwd.fixpoint_step, bwd.fixpoint_step)
    if kf is None:
        kf = window
    if kb is None:
        kb = window
    return max(kf, kb)
