"""Grounded planning problem model and its canonical document format.

A problem is a set of typed state variables (boolean, integer, real), a set
of actions with conjunctive preconditions and single-assignment effects, a
total initial assignment, and an ordered list of goal conditions.  Goals are
kept individually indexable because infeasibility explanations cite goal
indices.

The canonical on-disk form is a JSON object with top-level keys ``vars``,
``actions``, ``init``, ``goal`` and optional ``constraints``.  Rationals are
written as plain ints or "p/q" strings.  Parsing rejects unknown keys;
serialization is deterministic, so structurally equal problems produce
byte-identical documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

from .rational import format_rational, parse_rational


class VarKind(Enum):
    BOOLEAN = "boolean"
    INTEGER = "integer"
    REAL = "real"


class ProblemFormatError(Exception):
    """Schema-level parse failure; carries the document path of the fault."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ProblemValidationError(Exception):
    """Semantic validation failure; carries the individual diagnostics."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class StateVariable:
    id: int
    name: str
    kind: VarKind
    lower: Fraction | None = None
    upper: Fraction | None = None

    @property
    def is_numeric(self) -> bool:
        return self.kind is not VarKind.BOOLEAN


@dataclass(frozen=True)
class BoolLit:
    """Boolean literal condition: variable must equal the given polarity."""

    var: str
    polarity: bool


@dataclass(frozen=True)
class LinCond:
    """Linear relation over numeric variables: sum(coeff*var) op rhs."""

    terms: tuple[tuple[Fraction, str], ...]
    op: str  # "<=", ">=", "="
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(sorted(self.terms, key=lambda t: t[1])))


Condition = BoolLit | LinCond


@dataclass(frozen=True)
class BoolAssign:
    var: str
    value: bool


@dataclass(frozen=True)
class NumDelta:
    var: str
    delta: Fraction


Effect = BoolAssign | NumDelta


@dataclass(frozen=True)
class Action:
    name: str
    pre: tuple[Condition, ...]
    eff: tuple[Effect, ...]


@dataclass(frozen=True, eq=False)
class Problem:
    variables: tuple[StateVariable, ...]
    actions: tuple[Action, ...]
    init: dict[str, bool | Fraction]
    goal: tuple[Condition, ...]
    constraints: tuple[Condition, ...] = ()
    _by_name: dict[str, StateVariable] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {v.name: v for v in self.variables})

    def var(self, name: str) -> StateVariable:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def __eq__(self, other) -> bool:
        if not isinstance(other, Problem):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.actions == other.actions
            and self.init == other.init
            and self.goal == other.goal
            and self.constraints == other.constraints
        )

    def with_goal(self, goal: tuple[Condition, ...]) -> "Problem":
        return replace(self, goal=tuple(goal))

    def with_constraints(self, constraints: tuple[Condition, ...]) -> "Problem":
        return replace(self, constraints=tuple(constraints))


# ── Parsing ───────────────────────────────────────────────────────────────

_VAR_KEYS = {"name", "kind", "lower", "upper"}
_ACTION_KEYS = {"name", "pre", "eff"}
_TOP_KEYS = {"vars", "actions", "init", "goal", "constraints"}
_REL_KEYS = {"terms", "op", "rhs"}
_OPS = {"<=", ">=", "="}


def _reject_unknown(obj: dict, allowed: set[str], path: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ProblemFormatError(path, f"unknown keys {sorted(extra)}")


def _parse_value(raw, path: str) -> bool | Fraction:
    if isinstance(raw, bool):
        return raw
    try:
        return parse_rational(raw)
    except ValueError as exc:
        raise ProblemFormatError(path, str(exc)) from exc


def _parse_condition(raw, path: str) -> Condition:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ProblemFormatError(path, "condition must be a single-key object")
    if "lit" in raw:
        lit = raw["lit"]
        if not (isinstance(lit, list) and len(lit) == 2 and isinstance(lit[0], str)
                and isinstance(lit[1], bool)):
            raise ProblemFormatError(path + ".lit", "expected [varname, true|false]")
        return BoolLit(lit[0], lit[1])
    if "rel" in raw:
        rel = raw["rel"]
        if not isinstance(rel, dict):
            raise ProblemFormatError(path + ".rel", "expected an object")
        _reject_unknown(rel, _REL_KEYS, path + ".rel")
        for key in _REL_KEYS:
            if key not in rel:
                raise ProblemFormatError(path + ".rel", f"missing key {key!r}")
        if rel["op"] not in _OPS:
            raise ProblemFormatError(path + ".rel.op", f"op must be one of {sorted(_OPS)}")
        raw_terms = rel["terms"]
        if not isinstance(raw_terms, list) or not raw_terms:
            raise ProblemFormatError(path + ".rel.terms", "expected a non-empty list")
        terms = []
        for i, t in enumerate(raw_terms):
            tpath = f"{path}.rel.terms[{i}]"
            if not (isinstance(t, list) and len(t) == 2 and isinstance(t[1], str)):
                raise ProblemFormatError(tpath, "expected [coeff, varname]")
            coeff = _parse_value(t[0], tpath)
            if isinstance(coeff, bool):
                raise ProblemFormatError(tpath, "coefficient must be a rational")
            terms.append((coeff, t[1]))
        rhs = _parse_value(rel["rhs"], path + ".rel.rhs")
        if isinstance(rhs, bool):
            raise ProblemFormatError(path + ".rel.rhs", "rhs must be a rational")
        return LinCond(tuple(terms), rel["op"], rhs)
    raise ProblemFormatError(path, "condition must use key 'lit' or 'rel'")


def _parse_effect(raw, path: str) -> Effect:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ProblemFormatError(path, "effect must be a single-key object")
    if "set" in raw:
        pair = raw["set"]
        if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)
                and isinstance(pair[1], bool)):
            raise ProblemFormatError(path + ".set", "expected [varname, true|false]")
        return BoolAssign(pair[0], pair[1])
    if "add" in raw:
        pair = raw["add"]
        if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)):
            raise ProblemFormatError(path + ".add", "expected [varname, delta]")
        delta = _parse_value(pair[1], path + ".add")
        if isinstance(delta, bool):
            raise ProblemFormatError(path + ".add", "delta must be a rational")
        return NumDelta(pair[0], delta)
    raise ProblemFormatError(path, "effect must use key 'set' or 'add'")


def parse_problem(text: str) -> Problem:
    """Parse and validate a canonical problem document.

    Raises ProblemFormatError on schema violations and
    ProblemValidationError on semantic ones.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}, col {exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("$", "top level must be an object")
    _reject_unknown(doc, _TOP_KEYS, "$")
    for key in ("vars", "actions", "init", "goal"):
        if key not in doc:
            raise ProblemFormatError("$", f"missing key {key!r}")

    if not isinstance(doc["vars"], list):
        raise ProblemFormatError("$.vars", "expected a list")
    variables = []
    for i, raw in enumerate(doc["vars"]):
        path = f"$.vars[{i}]"
        if not isinstance(raw, dict):
            raise ProblemFormatError(path, "expected an object")
        _reject_unknown(raw, _VAR_KEYS, path)
        if "name" not in raw or not isinstance(raw["name"], str):
            raise ProblemFormatError(path, "missing or non-string 'name'")
        try:
            kind = VarKind(raw.get("kind"))
        except ValueError:
            raise ProblemFormatError(path + ".kind",
                                     "kind must be boolean|integer|real") from None
        lower = upper = None
        if "lower" in raw:
            lower = _parse_value(raw["lower"], path + ".lower")
        if "upper" in raw:
            upper = _parse_value(raw["upper"], path + ".upper")
        if isinstance(lower, bool) or isinstance(upper, bool):
            raise ProblemFormatError(path, "bounds must be rationals")
        variables.append(StateVariable(i, raw["name"], kind, lower, upper))

    if not isinstance(doc["actions"], list):
        raise ProblemFormatError("$.actions", "expected a list")
    actions = []
    for i, raw in enumerate(doc["actions"]):
        path = f"$.actions[{i}]"
        if not isinstance(raw, dict):
            raise ProblemFormatError(path, "expected an object")
        _reject_unknown(raw, _ACTION_KEYS, path)
        if "name" not in raw or not isinstance(raw["name"], str):
            raise ProblemFormatError(path, "missing or non-string 'name'")
        pre = tuple(_parse_condition(c, f"{path}.pre[{j}]")
                    for j, c in enumerate(raw.get("pre", [])))
        eff = tuple(_parse_effect(e, f"{path}.eff[{j}]")
                    for j, e in enumerate(raw.get("eff", [])))
        actions.append(Action(raw["name"], pre, eff))

    if not isinstance(doc["init"], dict):
        raise ProblemFormatError("$.init", "expected an object")
    init = {name: _parse_value(v, f"$.init.{name}") for name, v in doc["init"].items()}

    if not isinstance(doc["goal"], list):
        raise ProblemFormatError("$.goal", "expected a list")
    goal = tuple(_parse_condition(c, f"$.goal[{i}]") for i, c in enumerate(doc["goal"]))

    constraints = ()
    if "constraints" in doc:
        if not isinstance(doc["constraints"], list):
            raise ProblemFormatError("$.constraints", "expected a list")
        constraints = tuple(_parse_condition(c, f"$.constraints[{i}]")
                            for i, c in enumerate(doc["constraints"]))

    problem = Problem(tuple(variables), tuple(actions), init, goal, constraints)
    diagnostics = validate_problem(problem)
    if diagnostics:
        raise ProblemValidationError(diagnostics)
    return problem


# ── Serialization ─────────────────────────────────────────────────────────

def _condition_doc(cond: Condition):
    if isinstance(cond, BoolLit):
        return {"lit": [cond.var, cond.polarity]}
    return {"rel": {
        "terms": [[format_rational(c), v] for c, v in cond.terms],
        "op": cond.op,
        "rhs": format_rational(cond.rhs),
    }}


def _effect_doc(eff: Effect):
    if isinstance(eff, BoolAssign):
        return {"set": [eff.var, eff.value]}
    return {"add": [eff.var, format_rational(eff.delta)]}


def _value_doc(value: bool | Fraction):
    if isinstance(value, bool):
        return value
    return format_rational(value)


def serialize_problem(problem: Problem) -> str:
    """Emit the canonical document; a fixed point of parse_problem."""
    doc: dict = {"vars": [], "actions": [], "init": {}, "goal": []}
    for v in problem.variables:
        entry: dict = {"name": v.name, "kind": v.kind.value}
        if v.lower is not None:
            entry["lower"] = format_rational(v.lower)
        if v.upper is not None:
            entry["upper"] = format_rational(v.upper)
        doc["vars"].append(entry)
    for a in problem.actions:
        doc["actions"].append({
            "name": a.name,
            "pre": [_condition_doc(c) for c in a.pre],
            "eff": [_effect_doc(e) for e in a.eff],
        })
    doc["init"] = {v.name: _value_doc(problem.init[v.name]) for v in problem.variables
                   if v.name in problem.init}
    doc["goal"] = [_condition_doc(c) for c in problem.goal]
    if problem.constraints:
        doc["constraints"] = [_condition_doc(c) for c in problem.constraints]
    return json.dumps(doc, indent=2) + "\n"


def condition_doc(cond: Condition):
    """Document form of one condition (wire API and journals)."""
    return _condition_doc(cond)


def parse_condition_doc(raw, path: str = "$") -> Condition:
    """Parse one condition object; raises ProblemFormatError."""
    return _parse_condition(raw, path)


# ── Validation ────────────────────────────────────────────────────────────

def _check_condition(problem: Problem, cond: Condition, subject: str,
                     out: list[Diagnostic]) -> None:
    if isinstance(cond, BoolLit):
        if not problem.has_var(cond.var):
            out.append(Diagnostic("unknown-var", subject, f"unknown variable {cond.var!r}"))
        elif problem.var(cond.var).kind is not VarKind.BOOLEAN:
            out.append(Diagnostic("lit-on-numeric", subject,
                                  f"literal on non-boolean variable {cond.var!r}"))
        return
    if not cond.terms:
        out.append(Diagnostic("empty-relation", subject, "relation has no terms"))
    seen = set()
    for coeff, name in cond.terms:
        if coeff == 0:
            out.append(Diagnostic("zero-coeff", subject, f"zero coefficient on {name!r}"))
        if name in seen:
            out.append(Diagnostic("dup-term", subject, f"duplicate term for {name!r}"))
        seen.add(name)
        if not problem.has_var(name):
            out.append(Diagnostic("unknown-var", subject, f"unknown variable {name!r}"))
        elif problem.var(name).kind is VarKind.BOOLEAN:
            out.append(Diagnostic("rel-on-boolean", subject,
                                  f"relation over boolean variable {name!r}"))


def _value_in_bounds(var: StateVariable, value: Fraction) -> bool:
    if var.lower is not None and value < var.lower:
        return False
    if var.upper is not None and value > var.upper:
        return False
    return True


def satisfies_condition(problem: Problem, state: dict[str, bool | Fraction],
                        cond: Condition) -> bool:
    """Evaluate one condition against a total assignment."""
    if isinstance(cond, BoolLit):
        return state[cond.var] == cond.polarity
    total = sum((c * state[v] for c, v in cond.terms), Fraction(0))
    if cond.op == "<=":
        return total <= cond.rhs
    if cond.op == ">=":
        return total >= cond.rhs
    return total == cond.rhs


def validate_problem(problem: Problem) -> list[Diagnostic]:
    """Return one diagnostic per violated model invariant; empty when valid."""
    out: list[Diagnostic] = []

    seen_names: set[str] = set()
    for v in problem.variables:
        subject = f"var {v.name}"
        if v.name in seen_names:
            out.append(Diagnostic("dup-var", subject, "duplicate variable name"))
        seen_names.add(v.name)
        if v.kind is VarKind.BOOLEAN and (v.lower is not None or v.upper is not None):
            out.append(Diagnostic("bool-bounds", subject,
                                  "boolean variables take no explicit bounds"))
        if v.lower is not None and v.upper is not None and v.lower > v.upper:
            out.append(Diagnostic("bounds-order", subject, "lower exceeds upper"))

    seen_actions: set[str] = set()
    for a in problem.actions:
        subject = f"action {a.name}"
        if a.name in seen_actions:
            out.append(Diagnostic("dup-action", subject, "duplicate action name"))
        if problem.has_var(a.name):
            out.append(Diagnostic("name-collision", subject,
                                  "action name shadows a state variable"))
        seen_actions.add(a.name)
        for c in a.pre:
            _check_condition(problem, c, subject + " pre", out)
        touched: set[str] = set()
        for e in a.eff:
            if e.var in touched:
                out.append(Diagnostic("dup-effect", subject,
                                      f"two effects on variable {e.var!r}"))
            touched.add(e.var)
            if not problem.has_var(e.var):
                out.append(Diagnostic("unknown-var", subject,
                                      f"unknown variable {e.var!r}"))
                continue
            kind = problem.var(e.var).kind
            if isinstance(e, BoolAssign) and kind is not VarKind.BOOLEAN:
                out.append(Diagnostic("assign-on-numeric", subject,
                                      f"boolean assignment to numeric {e.var!r}"))
            if isinstance(e, NumDelta):
                if kind is VarKind.BOOLEAN:
                    out.append(Diagnostic("delta-on-boolean", subject,
                                          f"numeric delta on boolean {e.var!r}"))
                if e.delta == 0:
                    out.append(Diagnostic("zero-delta", subject,
                                          f"zero delta on {e.var!r}"))

    for v in problem.variables:
        subject = f"init {v.name}"
        if v.name not in problem.init:
            out.append(Diagnostic("init-missing", subject, "variable has no initial value"))
            continue
        value = problem.init[v.name]
        if v.kind is VarKind.BOOLEAN:
            if not isinstance(value, bool):
                out.append(Diagnostic("init-type", subject, "boolean variable needs true/false"))
        else:
            if isinstance(value, bool):
                out.append(Diagnostic("init-type", subject, "numeric variable needs a rational"))
            else:
                if v.kind is VarKind.INTEGER and value.denominator != 1:
                    out.append(Diagnostic("init-integrality", subject,
                                          "integer variable needs an integral value"))
                if not _value_in_bounds(v, value):
                    out.append(Diagnostic("init-bounds", subject,
                                          f"initial value {value} outside bounds"))
    for name in problem.init:
        if not problem.has_var(name):
            out.append(Diagnostic("unknown-var", f"init {name}",
                                  f"unknown variable {name!r}"))

    for i, c in enumerate(problem.goal):
        _check_condition(problem, c, f"goal[{i}]", out)
    for i, c in enumerate(problem.constraints):
        _check_condition(problem, c, f"constraint[{i}]", out)

    if not any(d.code.startswith(("unknown-var", "init-")) for d in out):
        for i, c in enumerate(problem.constraints):
            if not satisfies_condition(problem, problem.init, c):
                out.append(Diagnostic("constraint-at-init", f"constraint[{i}]",
                                      "initial state violates global constraint"))
    return out
