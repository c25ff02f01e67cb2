"""Expression IR with partial evaluation and incomplete satisfiability.

Nodes are hash-consed immutable dataclasses, so structurally equal
subexpressions are the same object and equality checks are cheap.  The two
workhorses are:

* ``pval``: substitute bindings and algebraically simplify.  Fully-bound
  expressions reduce to constants.
* ``psat``: sound but incomplete satisfiability via unit propagation and
  pure-literal elimination, with interval evaluation of linear atoms over
  variable boxes.  Runs to a propagation fixpoint with no search, so it may
  return UNKNOWN.

Boolean variables may appear in linear terms (value 1 when true), which is
how transition-count sums and cardinality rows are expressed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

Value = bool | Fraction
Bindings = Mapping[str, Value]
Box = tuple[Fraction | None, Fraction | None]


class Sat(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class Expr:
    """Base node; construct via the module-level smart constructors."""

    __slots__ = ()


_INTERN: dict[tuple, "Expr"] = {}


def _intern(key: tuple, build) -> Expr:
    node = _INTERN.get(key)
    if node is None:
        node = build()
        _INTERN[key] = node
    return node


@dataclass(frozen=True, eq=False, repr=False)
class Const(Expr):
    value: Value

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True, eq=False, repr=False)
class VarRef(Expr):
    name: str

    def __repr__(self):
        return f"VarRef({self.name})"


@dataclass(frozen=True, eq=False, repr=False)
class Not(Expr):
    child: Expr

    def __repr__(self):
        return f"Not({self.child!r})"


@dataclass(frozen=True, eq=False, repr=False)
class And(Expr):
    children: tuple[Expr, ...]

    def __repr__(self):
        return f"And{self.children!r}"


@dataclass(frozen=True, eq=False, repr=False)
class Or(Expr):
    children: tuple[Expr, ...]

    def __repr__(self):
        return f"Or{self.children!r}"


@dataclass(frozen=True, eq=False, repr=False)
class Implies(Expr):
    lhs: Expr
    rhs: Expr

    def __repr__(self):
        return f"Implies({self.lhs!r}, {self.rhs!r})"


@dataclass(frozen=True, eq=False, repr=False)
class LinRel(Expr):
    terms: tuple[tuple[Fraction, str], ...]  # sorted by var, nonzero coeffs
    op: str  # "<=", ">=", "="
    rhs: Fraction

    def __repr__(self):
        return f"LinRel({self.terms!r}, {self.op!r}, {self.rhs!r})"


@dataclass(frozen=True, eq=False, repr=False)
class CardAtMost(Expr):
    vars: tuple[str, ...]
    k: int

    def __repr__(self):
        return f"CardAtMost({self.vars!r}, {self.k})"


@dataclass(frozen=True, eq=False, repr=False)
class CardExactly(Expr):
    vars: tuple[str, ...]
    k: int

    def __repr__(self):
        return f"CardExactly({self.vars!r}, {self.k})"


# ── Smart constructors ────────────────────────────────────────────────────

# Keys are type-tagged: True, 1, and Fraction(1) hash alike in Python.
TRUE: Const = _INTERN.setdefault(("const", "b", True), Const(True))  # type: ignore[assignment]
FALSE: Const = _INTERN.setdefault(("const", "b", False), Const(False))  # type: ignore[assignment]


def const(value: Value) -> Const:
    if value is True:
        return TRUE
    if value is False:
        return FALSE
    return _intern(("const", "n", value), lambda: Const(value))  # type: ignore[return-value]


def var(name: str) -> VarRef:
    return _intern(("var", name), lambda: VarRef(name))  # type: ignore[return-value]


def not_(e: Expr) -> Expr:
    if isinstance(e, Const):
        return const(not e.value)
    if isinstance(e, Not):
        return e.child
    return _intern(("not", id(e)), lambda: Not(e))


def _flatten(kind, children: Iterable[Expr]):
    for c in children:
        if isinstance(c, kind):
            yield from c.children
        else:
            yield c


def and_(*children: Expr) -> Expr:
    flat: dict[int, Expr] = {}
    for c in _flatten(And, children):
        if c is FALSE:
            return FALSE
        if c is TRUE:
            continue
        flat[id(c)] = c
    items = list(flat.values())
    ids = set(flat)
    for c in items:
        if id(not_(c)) in ids:
            return FALSE
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    key = ("and", tuple(id(c) for c in items))
    return _intern(key, lambda: And(tuple(items)))


def or_(*children: Expr) -> Expr:
    flat: dict[int, Expr] = {}
    for c in _flatten(Or, children):
        if c is TRUE:
            return TRUE
        if c is FALSE:
            continue
        flat[id(c)] = c
    items = list(flat.values())
    ids = set(flat)
    for c in items:
        if id(not_(c)) in ids:
            return TRUE
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    key = ("or", tuple(id(c) for c in items))
    return _intern(key, lambda: Or(tuple(items)))


def implies(lhs: Expr, rhs: Expr) -> Expr:
    if lhs is FALSE or rhs is TRUE:
        return TRUE
    if lhs is TRUE:
        return rhs
    if rhs is FALSE:
        return not_(lhs)
    return _intern(("implies", id(lhs), id(rhs)), lambda: Implies(lhs, rhs))


def _eval_rel(total: Fraction, op: str, rhs: Fraction) -> bool:
    if op == "<=":
        return total <= rhs
    if op == ">=":
        return total >= rhs
    return total == rhs


def linrel(terms: Iterable[tuple[Fraction, str]], op: str, rhs: Fraction) -> Expr:
    if op not in ("<=", ">=", "="):
        raise ValueError(f"bad relation op {op!r}")
    merged: dict[str, Fraction] = {}
    for coeff, name in terms:
        merged[name] = merged.get(name, Fraction(0)) + Fraction(coeff)
    clean = tuple(sorted(((c, v) for v, c in merged.items() if c != 0),
                         key=lambda t: t[1]))
    rhs = Fraction(rhs)
    if not clean:
        return const(_eval_rel(Fraction(0), op, rhs))
    key = ("rel", clean, op, rhs)
    return _intern(key, lambda: LinRel(clean, op, rhs))


def linsum(terms: Iterable[tuple[Fraction, str]], op: str, rhs: Fraction) -> Expr:
    """Alias constructor for relations built from running sums."""
    return linrel(terms, op, rhs)


def at_most(vars: Iterable[str], k: int) -> Expr:
    vs = tuple(sorted(set(vars)))
    if k < 0:
        return FALSE
    if k >= len(vs):
        return TRUE
    if k == 0:
        return and_(*(not_(var(v)) for v in vs))
    return _intern(("atmost", vs, k), lambda: CardAtMost(vs, k))


def exactly(vars: Iterable[str], k: int) -> Expr:
    vs = tuple(sorted(set(vars)))
    if k < 0 or k > len(vs):
        return FALSE
    if not vs:
        return TRUE if k == 0 else FALSE
    if k == 0:
        return and_(*(not_(var(v)) for v in vs))
    if k == len(vs):
        return and_(*(var(v) for v in vs))
    return _intern(("exactly", vs, k), lambda: CardExactly(vs, k))


# ── Partial evaluation ────────────────────────────────────────────────────

def _as_bool(value: Value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if value == 1:
        return True
    if value == 0:
        return False
    raise ValueError(f"binding for {name!r} used as boolean but equals {value}")


def _as_num(value: Value) -> Fraction:
    if isinstance(value, bool):
        return Fraction(1 if value else 0)
    return value


def pval(e: Expr, bindings: Bindings) -> Expr:
    """Substitute bindings and simplify; equivalent to e under the bindings."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        out = memo.get(id(node))
        if out is not None:
            return out
        if isinstance(node, Const):
            out = node
        elif isinstance(node, VarRef):
            if node.name in bindings:
                out = const(_as_bool(bindings[node.name], node.name))
            else:
                out = node
        elif isinstance(node, Not):
            out = not_(go(node.child))
        elif isinstance(node, And):
            out = and_(*(go(c) for c in node.children))
        elif isinstance(node, Or):
            out = or_(*(go(c) for c in node.children))
        elif isinstance(node, Implies):
            out = implies(go(node.lhs), go(node.rhs))
        elif isinstance(node, LinRel):
            remaining = []
            acc = Fraction(0)
            for coeff, name in node.terms:
                if name in bindings:
                    acc += coeff * _as_num(bindings[name])
                else:
                    remaining.append((coeff, name))
            out = linrel(remaining, node.op, node.rhs - acc)
        elif isinstance(node, CardAtMost):
            remaining, trues = [], 0
            for name in node.vars:
                if name in bindings:
                    trues += 1 if _as_bool(bindings[name], name) else 0
                else:
                    remaining.append(name)
            out = at_most(remaining, node.k - trues)
        elif isinstance(node, CardExactly):
            remaining, trues = [], 0
            for name in node.vars:
                if name in bindings:
                    trues += 1 if _as_bool(bindings[name], name) else 0
                else:
                    remaining.append(name)
            out = exactly(remaining, node.k - trues)
        else:
            raise TypeError(node)
        memo[id(node)] = out
        return out

    return go(e)


def eval_expr(e: Expr, bindings: Bindings) -> bool:
    """Total evaluation; raises if any variable is unbound."""
    result = pval(e, bindings)
    if not isinstance(result, Const) or not isinstance(result.value, bool):
        raise ValueError(f"expression not fully bound: {pretty(result)}")
    return result.value


# ── Negation normal form ──────────────────────────────────────────────────

def _rel_integral(node: LinRel, integer_vars: frozenset[str]) -> bool:
    return (node.rhs.denominator == 1
            and all(c.denominator == 1 and v in integer_vars for c, v in node.terms))


def _neg_rel(node: LinRel, integer_vars: frozenset[str]) -> Expr:
    # Closed complements: exact for all-integer relations, a sound
    # over-approximation (boundary included) for real-valued ones.
    tight = 1 if _rel_integral(node, integer_vars) else 0
    if node.op == "<=":
        return linrel(node.terms, ">=", node.rhs + tight)
    if node.op == ">=":
        return linrel(node.terms, "<=", node.rhs - tight)
    return or_(linrel(node.terms, "<=", node.rhs - tight),
               linrel(node.terms, ">=", node.rhs + tight))


def nnf(e: Expr, integer_vars: frozenset[str] = frozenset()) -> Expr:
    """Push negations to atoms; relation complements flip the operator."""

    def pos(node: Expr) -> Expr:
        if isinstance(node, (Const, VarRef, LinRel, CardAtMost, CardExactly)):
            return node
        if isinstance(node, Not):
            return neg(node.child)
        if isinstance(node, And):
            return and_(*(pos(c) for c in node.children))
        if isinstance(node, Or):
            return or_(*(pos(c) for c in node.children))
        if isinstance(node, Implies):
            return or_(neg(node.lhs), pos(node.rhs))
        raise TypeError(node)

    def neg(node: Expr) -> Expr:
        if isinstance(node, Const):
            return const(not node.value)
        if isinstance(node, VarRef):
            return not_(node)
        if isinstance(node, Not):
            return pos(node.child)
        if isinstance(node, And):
            return or_(*(neg(c) for c in node.children))
        if isinstance(node, Or):
            return and_(*(neg(c) for c in node.children))
        if isinstance(node, Implies):
            return and_(pos(node.lhs), neg(node.rhs))
        if isinstance(node, LinRel):
            return _neg_rel(node, integer_vars)
        if isinstance(node, CardAtMost):
            return linrel(((Fraction(1), v) for v in node.vars), ">=",
                          Fraction(node.k + 1))
        if isinstance(node, CardExactly):
            return or_(linrel(((Fraction(1), v) for v in node.vars), "<=",
                              Fraction(node.k - 1)),
                       linrel(((Fraction(1), v) for v in node.vars), ">=",
                              Fraction(node.k + 1)))
        raise TypeError(node)

    return pos(e)


# ── Incomplete satisfiability ─────────────────────────────────────────────

def _interval_of(terms, boxes: Mapping[str, Box]):
    lo: Fraction | None = Fraction(0)
    hi: Fraction | None = Fraction(0)
    for coeff, name in terms:
        blo, bhi = boxes.get(name, (None, None))
        if coeff > 0:
            tlo, thi = blo, bhi
        else:
            tlo, thi = bhi, blo
        lo = None if (lo is None or tlo is None) else lo + coeff * tlo
        hi = None if (hi is None or thi is None) else hi + coeff * thi
    return lo, hi


def _decide_rel(node: LinRel, boxes: Mapping[str, Box]) -> bool | None:
    lo, hi = _interval_of(node.terms, boxes)
    if node.op == "<=":
        if hi is not None and hi <= node.rhs:
            return True
        if lo is not None and lo > node.rhs:
            return False
    elif node.op == ">=":
        if lo is not None and lo >= node.rhs:
            return True
        if hi is not None and hi < node.rhs:
            return False
    else:
        if lo is not None and lo > node.rhs:
            return False
        if hi is not None and hi < node.rhs:
            return False
        if lo is not None and hi is not None and lo == hi == node.rhs:
            return True
    return None


def _interval_rewrite(e: Expr, boxes: Mapping[str, Box]) -> Expr:
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        out = memo.get(id(node))
        if out is not None:
            return out
        if isinstance(node, LinRel):
            decided = _decide_rel(node, boxes)
            out = node if decided is None else const(decided)
        elif isinstance(node, Not):
            out = not_(go(node.child))
        elif isinstance(node, And):
            out = and_(*(go(c) for c in node.children))
        elif isinstance(node, Or):
            out = or_(*(go(c) for c in node.children))
        elif isinstance(node, Implies):
            out = implies(go(node.lhs), go(node.rhs))
        else:
            out = node
        memo[id(node)] = out
        return out

    return go(e)


def _conjuncts(e: Expr) -> tuple[Expr, ...]:
    return e.children if isinstance(e, And) else (e,)


def _polarities(e: Expr, pos: set[str], neg: set[str], impure: set[str]) -> None:
    if isinstance(e, VarRef):
        pos.add(e.name)
    elif isinstance(e, Not) and isinstance(e.child, VarRef):
        neg.add(e.child.name)
    elif isinstance(e, Not):
        # NNF input; only literal negation expected, but stay safe.
        _collect_vars(e.child, impure)
    elif isinstance(e, (And, Or)):
        for c in e.children:
            _polarities(c, pos, neg, impure)
    elif isinstance(e, Implies):
        _collect_vars(e, impure)
    elif isinstance(e, LinRel):
        for _, name in e.terms:
            impure.add(name)
    elif isinstance(e, (CardAtMost, CardExactly)):
        impure.update(e.vars)


def _collect_vars(e: Expr, out: set[str]) -> None:
    if isinstance(e, VarRef):
        out.add(e.name)
    elif isinstance(e, Not):
        _collect_vars(e.child, out)
    elif isinstance(e, (And, Or)):
        for c in e.children:
            _collect_vars(c, out)
    elif isinstance(e, Implies):
        _collect_vars(e.lhs, out)
        _collect_vars(e.rhs, out)
    elif isinstance(e, LinRel):
        for _, name in e.terms:
            out.add(name)
    elif isinstance(e, (CardAtMost, CardExactly)):
        out.update(e.vars)


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    _collect_vars(e, out)
    return out


def _logical_vars(e: Expr) -> set[str]:
    """Variables appearing as propositions (not only inside linear terms)."""
    out: set[str] = set()

    def go(node: Expr) -> None:
        if isinstance(node, VarRef):
            out.add(node.name)
        elif isinstance(node, Not):
            go(node.child)
        elif isinstance(node, (And, Or)):
            for c in node.children:
                go(c)
        elif isinstance(node, Implies):
            go(node.lhs)
            go(node.rhs)
        elif isinstance(node, (CardAtMost, CardExactly)):
            out.update(node.vars)

    go(e)
    return out


def psat(e: Expr, boxes: Mapping[str, Box] | None = None) -> Sat:
    """Sound, incomplete satisfiability check.

    SAT and UNSAT answers are definitive; anything propagation cannot
    settle comes back UNKNOWN.
    """
    current = pval(e, {})
    bindings: dict[str, Value] = {}
    while True:
        if boxes:
            current = _interval_rewrite(current, boxes)
        if isinstance(current, Const):
            return Sat.SAT if current.value else Sat.UNSAT
        new: dict[str, Value] = {}
        for item in _conjuncts(current):
            if isinstance(item, VarRef):
                name, value = item.name, True
            elif isinstance(item, Not) and isinstance(item.child, VarRef):
                name, value = item.child.name, False
            elif (isinstance(item, LinRel) and item.op == "=" and len(item.terms) == 1):
                coeff, name = item.terms[0]
                value = item.rhs / coeff
                if value not in (0, 1) and name in _logical_vars(current):
                    continue  # not representable as a boolean binding
            else:
                continue
            if name in bindings and bindings[name] != value:
                return Sat.UNSAT
            if name in new and new[name] != value:
                return Sat.UNSAT
            if name not in bindings:
                new[name] = value
        if not new:
            break
        bindings.update(new)
        current = pval(current, new)

    # Pure literal elimination on the NNF image: assigning a variable that
    # occurs with a single polarity can only raise the formula's value.
    flat = nnf(current)
    pos: set[str] = set()
    neg: set[str] = set()
    impure: set[str] = set()
    for item in _conjuncts(flat):
        _polarities(item, pos, neg, impure)
    pures = {name: True for name in pos - neg - impure}
    pures.update({name: False for name in neg - pos - impure})
    if pures:
        settled = pval(flat, pures)
        if isinstance(settled, Const) and settled.value:
            return Sat.SAT
    return Sat.UNKNOWN


# ── Emitters ──────────────────────────────────────────────────────────────

def _smt_num(x: Fraction) -> str:
    if x < 0:
        return f"(- {_smt_num(-x)})"
    if x.denominator == 1:
        return str(x.numerator)
    return f"(/ {x.numerator} {x.denominator})"


def _smt_sym(name: str) -> str:
    if name.replace("_", "").replace("-", "").isalnum() and not name[0].isdigit():
        return name
    return f"|{name}|"


def to_smt2(e: Expr, bool_vars: frozenset[str] = frozenset()) -> str:
    """Emit SMT-LIB 2 concrete syntax for one expression."""

    def term(node: Expr) -> str:
        if isinstance(node, Const):
            if isinstance(node.value, bool):
                return "true" if node.value else "false"
            return _smt_num(node.value)
        if isinstance(node, VarRef):
            return _smt_sym(node.name)
        if isinstance(node, Not):
            return f"(not {term(node.child)})"
        if isinstance(node, And):
            return "(and " + " ".join(term(c) for c in node.children) + ")"
        if isinstance(node, Or):
            return "(or " + " ".join(term(c) for c in node.children) + ")"
        if isinstance(node, Implies):
            return f"(=> {term(node.lhs)} {term(node.rhs)})"
        if isinstance(node, LinRel):
            parts = []
            for coeff, name in node.terms:
                sym = _smt_sym(name)
                if name in bool_vars:
                    sym = f"(ite {sym} 1 0)"
                parts.append(sym if coeff == 1 else f"(* {_smt_num(coeff)} {sym})")
            lhs = parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"
            op = "=" if node.op == "=" else node.op
            return f"({op} {lhs} {_smt_num(node.rhs)})"
        if isinstance(node, CardAtMost):
            return (f"((_ at-most {node.k}) "
                    + " ".join(_smt_sym(v) for v in node.vars) + ")")
        if isinstance(node, CardExactly):
            syms = " ".join(_smt_sym(v) for v in node.vars)
            return (f"(and ((_ at-most {node.k}) {syms}) "
                    f"((_ at-least {node.k}) {syms}))")
        raise TypeError(node)

    return term(e)


def pretty(e: Expr) -> str:
    """Compact human-readable rendering for diagnostics."""
    if isinstance(e, Const):
        return str(e.value).lower() if isinstance(e.value, bool) else str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Not):
        return f"!{pretty(e.child)}"
    if isinstance(e, And):
        return "(" + " & ".join(pretty(c) for c in e.children) + ")"
    if isinstance(e, Or):
        return "(" + " | ".join(pretty(c) for c in e.children) + ")"
    if isinstance(e, Implies):
        return f"({pretty(e.lhs)} -> {pretty(e.rhs)})"
    if isinstance(e, LinRel):
        parts = []
        for coeff, name in e.terms:
            if coeff == 1:
                parts.append(name)
            elif coeff == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{coeff}*{name}")
        return " + ".join(parts).replace("+ -", "- ") + f" {e.op} {e.rhs}"
    if isinstance(e, CardAtMost):
        return f"atmost({e.k}; {', '.join(e.vars)})"
    if isinstance(e, CardExactly):
        return f"exactly({e.k}; {', '.join(e.vars)})"
    raise TypeError(e)
