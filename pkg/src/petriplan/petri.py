"""Petri net construction from a grounded problem.

Places mirror state variables, transitions mirror actions, and arcs fall
into three structural cases per boolean variable occurrence:

* precondition only: a bidirectional arc pair, weight +1 for a positive
  literal and -1 for a negative one; net token change is zero.
* effect only: a single transition-to-place arc, weight +1/-1 for
  set-true/set-false; the place can be rebound to a value it already holds.
* precondition and effect with opposite polarity: one place-to-transition
  flip arc, weight +1 when flipping true to false and -1 for the reverse.

An effect that re-asserts its own precondition's polarity is a no-op and
is kept as a precondition-only pair, so it never contributes flow or a
rebind.  Numeric effects become effect arcs weighted by the delta; numeric
preconditions hang off precondition arcs that carry the relation itself.

Bound inference for numeric places: a variable no action decreases keeps
its initial value as a lower bound; when every decreasing action (by x)
carries a single-variable precondition v >= y, the lower bound is
min(y - x); symmetrically for increases and upper bounds.  Explicit bounds
win whenever they are tighter, and a rule with missing preconditions
leaves the bound absent rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .problem import (
    Action,
    BoolAssign,
    BoolLit,
    Condition,
    LinCond,
    Problem,
    VarKind,
)
from .rational import format_rational


class ArcKind(Enum):
    PRE_ONLY = "pre"
    EFF_ONLY = "eff"
    PRE_AND_EFF = "pre+eff"


@dataclass(frozen=True)
class Arc:
    place: int
    transition: int
    kind: ArcKind
    weight: Fraction
    polarity: bool | None = None      # PRE_ONLY on a boolean place
    bool_value: bool | None = None    # EFF_ONLY on a boolean place
    flip_to: bool | None = None       # PRE_AND_EFF target value
    delta: Fraction | None = None     # EFF_ONLY on a numeric place
    cond: LinCond | None = None       # PRE_ONLY numeric relation


@dataclass(frozen=True)
class PetriNet:
    problem: Problem
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    arcs: tuple[Arc, ...]
    incidence: dict[tuple[int, int], Fraction]
    rebind_to_true: tuple[bool, ...]
    rebind_to_false: tuple[bool, ...]
    bounds: tuple[tuple[Fraction | None, Fraction | None], ...]
    init_marking: dict[str, bool | Fraction]
    goal_marking: tuple[Condition, ...]

    def place_id(self, name: str) -> int:
        return self.problem.var(name).id

    def place_kind(self, place: int) -> VarKind:
        return self.problem.variables[place].kind

    def column(self, transition: int) -> dict[int, Fraction]:
        return {i: w for (i, j), w in self.incidence.items() if j == transition}


def build_petri(problem: Problem) -> PetriNet:
    """Classify every variable occurrence into the three arc cases."""
    places = tuple(v.name for v in problem.variables)
    transitions = tuple(a.name for a in problem.actions)
    arcs: list[Arc] = []
    incidence: dict[tuple[int, int], Fraction] = {}
    rebind_true = [False] * len(places)
    rebind_false = [False] * len(places)

    def bump(i: int, j: int, w: Fraction) -> None:
        if w == 0:
            return
        key = (i, j)
        incidence[key] = incidence.get(key, Fraction(0)) + w
        if incidence[key] == 0:
            del incidence[key]

    for j, action in enumerate(problem.actions):
        bool_pre: dict[str, set[bool]] = {}
        lin_pre: list[LinCond] = []
        for cond in action.pre:
            if isinstance(cond, BoolLit):
                bool_pre.setdefault(cond.var, set()).add(cond.polarity)
            else:
                lin_pre.append(cond)
        bool_eff: dict[str, bool] = {}
        num_eff: dict[str, Fraction] = {}
        for eff in action.eff:
            if isinstance(eff, BoolAssign):
                bool_eff[eff.var] = eff.value
            else:
                num_eff[eff.var] = eff.delta

        for name, polarities in bool_pre.items():
            i = problem.var(name).id
            value = bool_eff.pop(name, None)
            flip = (value is not None and len(polarities) == 1
                    and value not in polarities)
            if flip:
                weight = Fraction(1) if value is False else Fraction(-1)
                arcs.append(Arc(i, j, ArcKind.PRE_AND_EFF, weight, flip_to=value))
                bump(i, j, Fraction(1) if value else Fraction(-1))
            else:
                # Pure precondition, or an effect the precondition makes a
                # no-op; either way the net token change is zero.
                for pol in sorted(polarities):
                    weight = Fraction(1) if pol else Fraction(-1)
                    arcs.append(Arc(i, j, ArcKind.PRE_ONLY, weight, polarity=pol))
        for name, value in bool_eff.items():
            i = problem.var(name).id
            weight = Fraction(1) if value else Fraction(-1)
            arcs.append(Arc(i, j, ArcKind.EFF_ONLY, weight, bool_value=value))
            bump(i, j, weight)
            if value:
                rebind_true[i] = True
            else:
                rebind_false[i] = True
        for name, delta in num_eff.items():
            i = problem.var(name).id
            arcs.append(Arc(i, j, ArcKind.EFF_ONLY, delta, delta=delta))
            bump(i, j, delta)
        for cond in lin_pre:
            for _, name in cond.terms:
                i = problem.var(name).id
                arcs.append(Arc(i, j, ArcKind.PRE_ONLY, Fraction(0), cond=cond))

    bounds = []
    for v in problem.variables:
        if v.kind is VarKind.BOOLEAN:
            bounds.append((Fraction(0), Fraction(1)))
        else:
            bounds.append((v.lower, v.upper))

    return PetriNet(
        problem=problem,
        places=places,
        transitions=transitions,
        arcs=tuple(arcs),
        incidence=incidence,
        rebind_to_true=tuple(rebind_true),
        rebind_to_false=tuple(rebind_false),
        bounds=tuple(bounds),
        init_marking=dict(problem.init),
        goal_marking=problem.goal,
    )


def _single_var_threshold(cond: LinCond, name: str, want: str) -> Fraction | None:
    """Read cond as `name >= y` or `name <= y`; None when not of that shape."""
    if len(cond.terms) != 1 or cond.op == "=":
        return None
    coeff, var = cond.terms[0]
    if var != name:
        return None
    op = cond.op if coeff > 0 else (">=" if cond.op == "<=" else "<=")
    if op != want:
        return None
    return cond.rhs / coeff


def infer_bounds(net: PetriNet) -> PetriNet:
    """Apply the increase/decrease bound rules on top of explicit bounds."""
    problem = net.problem
    new_bounds = list(net.bounds)
    for v in problem.variables:
        if v.kind is VarKind.BOOLEAN:
            continue
        i = v.id
        decreasing: list[tuple[Fraction, Action]] = []
        increasing: list[tuple[Fraction, Action]] = []
        for j, action in enumerate(problem.actions):
            w = net.incidence.get((i, j))
            if w is None:
                continue
            if w < 0:
                decreasing.append((-w, action))
            elif w > 0:
                increasing.append((w, action))

        init_val = problem.init[v.name]
        lower_inf: Fraction | None
        upper_inf: Fraction | None
        if not decreasing:
            lower_inf = init_val
        else:
            candidates = []
            for x, action in decreasing:
                ys = [y for cond in action.pre if isinstance(cond, LinCond)
                      and (y := _single_var_threshold(cond, v.name, ">=")) is not None]
                if not ys:
                    candidates = None
                    break
                candidates.append(max(ys) - x)
            lower_inf = min(candidates) if candidates else None
        if not increasing:
            upper_inf = init_val
        else:
            candidates = []
            for x, action in increasing:
                ys = [y for cond in action.pre if isinstance(cond, LinCond)
                      and (y := _single_var_threshold(cond, v.name, "<=")) is not None]
                if not ys:
                    candidates = None
                    break
                candidates.append(min(ys) + x)
            upper_inf = max(candidates) if candidates else None

        lo, hi = new_bounds[i]
        if lower_inf is not None:
            lo = lower_inf if lo is None else max(lo, lower_inf)
        if upper_inf is not None:
            hi = upper_inf if hi is None else min(hi, upper_inf)
        new_bounds[i] = (lo, hi)
    return replace(net, bounds=tuple(new_bounds))


def incidence_matrix(net: PetriNet) -> dict[tuple[int, int], Fraction]:
    return dict(net.incidence)


def emit_net(net: PetriNet) -> str:
    """Structured dump of the net for `analyze --emit-net`."""
    import json

    def nb(x: Fraction | None):
        return None if x is None else format_rational(x)

    doc = {
        "places": [
            {
                "id": i,
                "name": name,
                "kind": net.place_kind(i).value,
                "lower": nb(net.bounds[i][0]),
                "upper": nb(net.bounds[i][1]),
                "rebind_to_true": net.rebind_to_true[i],
                "rebind_to_false": net.rebind_to_false[i],
            }
            for i, name in enumerate(net.places)
        ],
        "transitions": [{"id": j, "name": name}
                        for j, name in enumerate(net.transitions)],
        "incidence": [[i, j, format_rational(w)]
                      for (i, j), w in sorted(net.incidence.items())],
        "arcs": [
            {
                "place": a.place,
                "transition": a.transition,
                "kind": a.kind.value,
                "weight": format_rational(a.weight),
            }
            for a in net.arcs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
