"""Incremental constraint backend: assertion store plus branch-and-bound.

The store only ever grows: goals and other retractable conditions travel as
per-check assumptions, compiled to temporary box tightenings (literals and
single-variable relations) or temporary rows, and fully removed after the
check.  This avoids the lost-work problem of popping assertion scopes.

Deciding a check runs branch-and-bound over the exact LP core:

* each node first runs an exact interval presolve (row propagation, guard
  fixing in both directions, integer rounding) to a fixpoint;
* the surviving subsystem, with fixed variables folded away and
  box-satisfied rows dropped, goes to the rational simplex;
* fractional integers are branched most-fractional (ties by declaration
  order); an indicator whose guard takes LP value 1 while its row is
  violated forces a branch on the guard;
* the incumbent model from the previous SAT check is tried first and, when
  it no longer satisfies the system, steers branch direction.  Warm starts
  never change verdicts, only node counts.

A node-limit overrun raises NodeLimitError rather than returning UNSAT.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .encode import MilpConstraintSet, PgResult, pg_transform, to_milp
from .expr import (
    Box,
    Const,
    Expr,
    LinRel,
    Not,
    VarRef,
    eval_expr,
    nnf,
    pval,
    to_smt2,
)
from .lp import LinProgram, LinRow, LpStatus, lp_feasible, lp_optimize, to_lp_format

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_NODE_LIMIT = 1_000_000
PROPAGATION_PASSES = 50


class SolveOutcome(Enum):
    SAT = "sat"
    UNSAT = "unsat"


class NodeLimitError(Exception):
    """Branch-and-bound exceeded its node budget; distinct from UNSAT."""


@dataclass(frozen=True)
class SolveResult:
    outcome: SolveOutcome
    model: dict[str, bool | Fraction] | None = None
    objective_value: Fraction | None = None
    nodes: int = 0


@dataclass
class _VarInfo:
    kind: str  # "bool" | "int" | "real"
    lo: Fraction | None
    hi: Fraction | None
    order: int


class SolverState:
    """Single-owner incremental solver; persistent assertions never leave."""

    def __init__(self, node_limit: int = DEFAULT_NODE_LIMIT):
        self.node_limit = node_limit
        self.vars: dict[str, _VarInfo] = {}
        self.rows: list[LinRow] = []
        self.indicators: list[tuple[str, bool, LinRow]] = []
        self.assertions: list[Expr] = []
        self.incumbent: dict[str, bool | Fraction] | None = None
        self.total_nodes = 0
        self._aux_counter = itertools.count()

    # ── Declarations and assertions ───────────────────────────────────

    def declare(self, name: str, kind: str, lo: Fraction | None = None,
                hi: Fraction | None = None) -> None:
        if name in self.vars:
            raise ValueError(f"variable {name!r} already declared")
        if kind not in ("bool", "int", "real"):
            raise ValueError(f"unknown kind {kind!r}")
        if kind == "bool":
            lo, hi = ZERO, ONE
        self.vars[name] = _VarInfo(kind, lo, hi, len(self.vars))

    def _fresh_aux(self) -> str:
        while True:
            name = f".pg{next(self._aux_counter)}"
            if name not in self.vars:
                return name

    def _check_declared(self, terms) -> None:
        for _, name in terms:
            if name not in self.vars:
                raise ValueError(f"undeclared variable {name!r}")

    def add_row(self, terms, op: str, rhs: Fraction) -> None:
        row = LinRow(tuple(terms), op, Fraction(rhs))
        self._check_declared(row.terms)
        self.rows.append(row)

    def add_indicator(self, guard: str, when: bool, terms, op: str,
                      rhs: Fraction) -> None:
        if guard not in self.vars or self.vars[guard].kind != "bool":
            raise ValueError(f"indicator guard {guard!r} must be a declared boolean")
        row = LinRow(tuple(terms), op, Fraction(rhs))
        self._check_declared(row.terms)
        self.indicators.append((guard, when, row))

    def _translate(self, e: Expr) -> MilpConstraintSet:
        flat = nnf(e, self._integer_vars())
        pg = pg_transform(flat, gensym=self._fresh_aux)
        milp = to_milp(pg, self._boxes(), mode="indicator")
        return milp

    def assert_expr(self, e: Expr) -> None:
        """Translate incrementally and append; persistent for all checks."""
        for name in _expr_vars(e):
            if name not in self.vars:
                raise ValueError(f"undeclared variable {name!r}")
        self.assertions.append(e)
        milp = self._translate(e)
        for name, (kind, lo, hi) in milp.variables.items():
            self.declare(name, kind, lo, hi)
        self.rows.extend(milp.rows)
        self.indicators.extend(milp.indicator_rows)

    def _integer_vars(self) -> frozenset[str]:
        return frozenset(n for n, v in self.vars.items() if v.kind in ("bool", "int"))

    def _boxes(self) -> dict[str, Box]:
        return {n: (v.lo, v.hi) for n, v in self.vars.items()}

    # ── Checking ──────────────────────────────────────────────────────

    def check_assuming(self, assumptions: list[Expr]) -> SolveResult:
        """Decide persistent /\\ assumptions; assumptions are fully retracted."""
        return self._solve(assumptions, objective=None)

    def minimize(self, objective: dict[str, Fraction],
                 assumptions: list[Expr] | None = None) -> SolveResult:
        return self._solve(list(assumptions or []), objective=objective)

    def _solve(self, assumptions: list[Expr],
               objective: dict[str, Fraction] | None) -> SolveResult:
        temp_boxes: dict[str, Box] = {}
        temp_rows: list[LinRow] = []
        temp_indicators: list[tuple[str, bool, LinRow]] = []
        temp_vars: dict[str, _VarInfo] = {}

        def tighten(name: str, lo: Fraction | None, hi: Fraction | None) -> bool:
            base = temp_boxes.get(name, (self.vars[name].lo, self.vars[name].hi))
            new_lo = base[0] if lo is None else (lo if base[0] is None else max(base[0], lo))
            new_hi = base[1] if hi is None else (hi if base[1] is None else min(base[1], hi))
            temp_boxes[name] = (new_lo, new_hi)
            return new_lo is None or new_hi is None or new_lo <= new_hi

        feasible = True
        for raw in assumptions:
            e = pval(raw, {})
            if isinstance(e, Const):
                if e.value is False:
                    feasible = False
                    break
                continue
            if isinstance(e, VarRef):
                feasible = tighten(e.name, ONE, ONE)
            elif isinstance(e, Not) and isinstance(e.child, VarRef):
                feasible = tighten(e.child.name, ZERO, ZERO)
            elif isinstance(e, LinRel) and len(e.terms) == 1:
                coeff, name = e.terms[0]
                value = e.rhs / coeff
                op = e.op if coeff > 0 else {"<=": ">=", ">=": "<=", "=": "="}[e.op]
                is_int = self.vars[name].kind in ("bool", "int")
                if op == "<=":
                    bound = _floor(value) if is_int else value
                    feasible = tighten(name, None, bound)
                elif op == ">=":
                    bound = _ceil(value) if is_int else value
                    feasible = tighten(name, bound, None)
                else:
                    if is_int and value.denominator != 1:
                        feasible = False
                    else:
                        feasible = tighten(name, value, value)
            else:
                flat = nnf(e, self._integer_vars())
                pg = pg_transform(flat, gensym=self._fresh_aux)
                milp = to_milp(pg, self._boxes(), mode="indicator")
                for name, (kind, lo, hi) in milp.variables.items():
                    temp_vars[name] = _VarInfo(kind, lo, hi,
                                               len(self.vars) + len(temp_vars))
                temp_rows.extend(milp.rows)
                temp_indicators.extend(milp.indicator_rows)
            if not feasible:
                break
        if not feasible:
            return SolveResult(SolveOutcome.UNSAT, nodes=0)

        search = _Search(
            state=self,
            extra_vars=temp_vars,
            boxes_override=temp_boxes,
            rows=self.rows + temp_rows,
            indicators=self.indicators + temp_indicators,
            objective=objective,
        )
        try:
            result = search.run()
        finally:
            self.total_nodes += search.nodes
        if result.outcome is SolveOutcome.SAT and objective is None:
            self.incumbent = dict(result.model)
            self._verify_model(result.model, assumptions)
        return result

    def _verify_model(self, model: dict[str, bool | Fraction],
                      assumptions: list[Expr]) -> None:
        for e in self.assertions + assumptions:
            if not eval_expr(e, model):
                raise AssertionError("model fails a persistent assertion")

    # ── Exports ───────────────────────────────────────────────────────

    def export(self, format: str) -> str:
        """Deterministic textual dump: "smt2" or "lp"."""
        if format == "smt2":
            return self._export_smt2()
        if format == "lp":
            return self._export_lp()
        raise ValueError(f"unknown export format {format!r}")

    def _export_smt2(self) -> str:
        sorts = {"bool": "Bool", "int": "Int", "real": "Real"}
        bool_vars = frozenset(n for n, v in self.vars.items() if v.kind == "bool")
        out = ["(set-logic QF_LIRA)"]
        for name, info in self.vars.items():
            sym = name if name.isalnum() else f"|{name}|"
            out.append(f"(declare-const {sym} {sorts[info.kind]})")
        for name, info in self.vars.items():
            if info.kind == "bool":
                continue
            rel = LinRel(((ONE, name),), ">=", info.lo) if info.lo is not None else None
            if rel is not None:
                out.append(f"(assert {to_smt2(rel, bool_vars)})")
            if info.hi is not None:
                rel = LinRel(((ONE, name),), "<=", info.hi)
                out.append(f"(assert {to_smt2(rel, bool_vars)})")
        for e in self.assertions:
            out.append(f"(assert {to_smt2(e, bool_vars)})")
        out.append("(check-sat)")
        return "\n".join(out) + "\n"

    def _export_lp(self) -> str:
        lp = LinProgram(variables=[], rows=list(self.rows))
        boxes = self._boxes()
        for name, info in self.vars.items():
            lp.add_var(name, info.lo, info.hi)
        for guard, when, row in self.indicators:
            pg = PgResult([], [(guard, row)], [])
            if not when:
                # Export encodes (not g => row) via the complement binary.
                comp = f".n.{guard}"
                if all(v[0] != comp for v in lp.variables):
                    lp.add_var(comp, ZERO, ONE)
                    lp.add_row(((ONE, comp), (ONE, guard)), "=", ONE)
                pg = PgResult([], [(comp, row)], [])
                boxes[comp] = (ZERO, ONE)
            milp = to_milp(pg, boxes, mode="big_m")
            lp.rows.extend(milp.rows)
        integer_vars = {n for n, v in self.vars.items() if v.kind in ("bool", "int")}
        return to_lp_format(lp, integer_vars)


def _expr_vars(e: Expr) -> set[str]:
    from .expr import free_vars
    return free_vars(e)


def _floor(x: Fraction) -> Fraction:
    return Fraction(x.numerator // x.denominator)


def _ceil(x: Fraction) -> Fraction:
    return Fraction(-((-x.numerator) // x.denominator))


# ── Branch and bound ──────────────────────────────────────────────────────

@dataclass
class _Search:
    state: SolverState
    extra_vars: dict[str, _VarInfo]
    boxes_override: dict[str, Box]
    rows: list[LinRow]
    indicators: list[tuple[str, bool, LinRow]]
    objective: dict[str, Fraction] | None
    nodes: int = 0
    best_model: dict[str, bool | Fraction] | None = None
    best_value: Fraction | None = None

    def all_vars(self) -> dict[str, _VarInfo]:
        merged = dict(self.state.vars)
        merged.update(self.extra_vars)
        return merged

    def run(self) -> SolveResult:
        self.infos = self.all_vars()
        root: dict[str, Box] = {}
        for name, info in self.infos.items():
            root[name] = self.boxes_override.get(name, (info.lo, info.hi))

        incumbent = self.state.incumbent
        if incumbent is not None and self.objective is None:
            model = self._try_incumbent(incumbent, root)
            if model is not None:
                return SolveResult(SolveOutcome.SAT, model, nodes=0)

        stack = [root]
        while stack:
            boxes = stack.pop()
            self.nodes += 1
            if self.nodes > self.state.node_limit:
                raise NodeLimitError(f"exceeded {self.state.node_limit} nodes")
            self._process(boxes, stack)
            if self.best_model is not None and self.objective is None:
                break
        if self.best_model is None:
            return SolveResult(SolveOutcome.UNSAT, nodes=self.nodes)
        return SolveResult(SolveOutcome.SAT, self.best_model, self.best_value,
                           self.nodes)

    # One node: propagate, reduce, solve LP, then accept or branch.
    def _process(self, boxes: dict[str, Box], stack: list) -> None:
        boxes = dict(boxes)
        if not self._propagate(boxes):
            return
        active_rows = self._active_rows(boxes)
        reduced, fixed_obj, ok = self._reduce(active_rows, boxes)
        if not ok:
            return
        lp = LinProgram(variables=[], rows=reduced[1])
        for name, lo, hi in reduced[0]:
            lp.add_var(name, lo, hi)
        if self.objective is not None:
            free_obj = {n: c for n, c in self.objective.items()
                        if not _is_fixed(boxes[n])}
            res = (lp_optimize(LinProgram(lp.variables, lp.rows,
                                          ("min", free_obj)))
                   if free_obj else lp_feasible(lp))
        else:
            res = lp_feasible(lp)
        if res.status is LpStatus.INFEASIBLE:
            return
        if res.status is LpStatus.UNBOUNDED:
            raise AssertionError("feasibility subproblems cannot be unbounded")
        point = dict(res.point) if res.point else {}
        bound = fixed_obj + (res.objective_value or ZERO)
        if (self.objective is not None and self.best_value is not None
                and bound >= self.best_value):
            return

        # Branch on a fractional integer if any.
        candidate = self._fractional(point, boxes)
        if candidate is not None:
            name, value = candidate
            self._branch(name, value, boxes, stack)
            return
        # All integral: check indicators whose guard sits at its active value.
        model = self._complete_model(point, boxes)
        violated = self._violated_indicator(model, boxes)
        if violated is not None:
            lo, hi = boxes[violated]
            if lo == hi:
                raise AssertionError("active indicator row survived reduction")
            down, up = dict(boxes), dict(boxes)
            down[violated] = (ZERO, ZERO)
            up[violated] = (ONE, ONE)
            stack.append(up)
            stack.append(down)
            return
        value = None
        if self.objective is not None:
            value = sum((c * _num(model[n]) for n, c in self.objective.items()),
                        ZERO)
            if self.best_value is not None and value >= self.best_value:
                return
        self.best_model = model
        self.best_value = value

    def _try_incumbent(self, incumbent, root: dict[str, Box]):
        model = {}
        for name, info in self.infos.items():
            lo, hi = root[name]
            if name in incumbent:
                model[name] = incumbent[name]
            else:
                value = _default_value(info, lo, hi)
                model[name] = (value == 1) if info.kind == "bool" else value
        for name, info in self.infos.items():
            v = _num(model[name])
            lo, hi = root[name]
            if (lo is not None and v < lo) or (hi is not None and v > hi):
                return None
        if self._rows_hold(model) and self._violated_indicator_exact(model) is None:
            return model
        return None

    def _rows_hold(self, model) -> bool:
        for row in self.rows:
            if not _row_holds(row, model):
                return False
        return True

    def _violated_indicator_exact(self, model):
        for guard, when, row in self.indicators:
            if _num(model[guard]) == (ONE if when else ZERO) and not _row_holds(row, model):
                return guard
        return None

    def _propagate(self, boxes: dict[str, Box]) -> bool:
        """Exact interval propagation to fixpoint; False means pruned."""
        for _ in range(PROPAGATION_PASSES):
            changed = False
            for row in self.rows:
                outcome = self._propagate_row(row, boxes)
                if outcome is None:
                    return False
                changed = changed or outcome
            for guard, when, row in self.indicators:
                glo, ghi = boxes[guard]
                active_val = ONE if when else ZERO
                if glo == ghi:
                    if glo == active_val:
                        outcome = self._propagate_row(row, boxes)
                        if outcome is None:
                            return False
                        changed = changed or outcome
                    continue
                # Guard free: if the row is already impossible, force the
                # guard to its inactive value.
                lo_act, hi_act = _activity(row.terms, boxes)
                impossible = (
                    (row.op == "<=" and lo_act is not None and lo_act > row.rhs)
                    or (row.op == ">=" and hi_act is not None and hi_act < row.rhs)
                    or (row.op == "=" and ((lo_act is not None and lo_act > row.rhs)
                                           or (hi_act is not None and hi_act < row.rhs))))
                if impossible:
                    inactive = ZERO if when else ONE
                    boxes[guard] = (inactive, inactive)
                    changed = True
            if not changed:
                return True
        return True

    def _propagate_row(self, row: LinRow, boxes: dict[str, Box]) -> bool | None:
        """Tighten boxes from one row; None signals infeasibility."""
        lo_act, hi_act = _activity(row.terms, boxes)
        if row.op in ("<=", "=") and lo_act is not None and lo_act > row.rhs:
            return None
        if row.op in (">=", "=") and hi_act is not None and hi_act < row.rhs:
            return None
        changed = False
        for coeff, name in row.terms:
            lo, hi = boxes[name]
            is_int = self.infos[name].kind in ("bool", "int")
            if coeff > 0:
                term_lo = None if lo is None else coeff * lo
                term_hi = None if hi is None else coeff * hi
            else:
                term_lo = None if hi is None else coeff * hi
                term_hi = None if lo is None else coeff * lo
            if row.op in ("<=", "="):
                # coeff*x <= rhs - (lo_act - term_lo) when the rest is minimal
                if lo_act is not None and term_lo is not None:
                    rest = lo_act - term_lo
                    limit = row.rhs - rest
                    if coeff > 0:
                        new_hi = limit / coeff
                        if is_int:
                            new_hi = _floor(new_hi)
                        if hi is None or new_hi < hi:
                            boxes[name] = (lo, new_hi)
                            lo, hi = boxes[name]
                            changed = True
                    else:
                        new_lo = limit / coeff
                        if is_int:
                            new_lo = _ceil(new_lo)
                        if lo is None or new_lo > lo:
                            boxes[name] = (new_lo, hi)
                            lo, hi = boxes[name]
                            changed = True
            if row.op in (">=", "="):
                if hi_act is not None and term_hi is not None:
                    rest = hi_act - term_hi
                    limit = row.rhs - rest
                    if coeff > 0:
                        new_lo = limit / coeff
                        if is_int:
                            new_lo = _ceil(new_lo)
                        if lo is None or new_lo > lo:
                            boxes[name] = (new_lo, hi)
                            lo, hi = boxes[name]
                            changed = True
                    else:
                        new_hi = limit / coeff
                        if is_int:
                            new_hi = _floor(new_hi)
                        if hi is None or new_hi < hi:
                            boxes[name] = (lo, new_hi)
                            lo, hi = boxes[name]
                            changed = True
            if lo is not None and hi is not None and lo > hi:
                return None
        return changed

    def _active_rows(self, boxes: dict[str, Box]) -> list[LinRow]:
        rows = list(self.rows)
        for guard, when, row in self.indicators:
            glo, ghi = boxes[guard]
            if glo == ghi and glo == (ONE if when else ZERO):
                rows.append(row)
        return rows

    def _reduce(self, rows: list[LinRow], boxes: dict[str, Box]):
        """Fold fixed variables into constants and drop box-satisfied rows."""
        used: dict[str, None] = {}
        reduced_rows: list[LinRow] = []
        for row in rows:
            terms = []
            shift = ZERO
            for coeff, name in row.terms:
                lo, hi = boxes[name]
                if lo is not None and lo == hi:
                    shift += coeff * lo
                else:
                    terms.append((coeff, name))
            rhs = row.rhs - shift
            if not terms:
                ok = (ZERO <= rhs if row.op == "<=" else
                      ZERO >= rhs if row.op == ">=" else ZERO == rhs)
                if not ok:
                    return None, ZERO, False
                continue
            lo_act, hi_act = _activity(terms, boxes)
            if row.op == "<=" and hi_act is not None and hi_act <= rhs:
                continue
            if row.op == ">=" and lo_act is not None and lo_act >= rhs:
                continue
            for _, name in terms:
                used[name] = None
            reduced_rows.append(LinRow(tuple(terms), row.op, rhs))
        fixed_obj = ZERO
        if self.objective is not None:
            for name, coeff in self.objective.items():
                lo, hi = boxes[name]
                if lo is not None and lo == hi:
                    fixed_obj += coeff * lo
                elif name not in used:
                    # Row-free objective var: keep it in the LP so the
                    # optimizer settles it (fixing it here would hide an
                    # indicator guard from the violation check).
                    used[name] = None
        variables = [(name, boxes[name][0], boxes[name][1]) for name in used]
        return (variables, reduced_rows), fixed_obj, True

    def _fractional(self, point: dict[str, Fraction], boxes: dict[str, Box]):
        best_name = None
        best_score = None
        for name, value in point.items():
            info = self.infos[name]
            if info.kind == "real" or value.denominator == 1:
                continue
            frac = value - _floor(value)
            score = abs(frac - Fraction(1, 2))
            if best_score is None or score < best_score or (
                    score == best_score and info.order < self.infos[best_name].order):
                best_name, best_score = name, score
        if best_name is None:
            return None
        return best_name, point[best_name]

    def _branch(self, name: str, value: Fraction, boxes: dict[str, Box],
                stack: list) -> None:
        lo, hi = boxes[name]
        down, up = dict(boxes), dict(boxes)
        down[name] = (lo, _floor(value))
        up[name] = (_ceil(value), hi)
        prefer_up = False
        incumbent = self.state.incumbent
        if incumbent is not None and name in incumbent:
            prefer_up = _num(incumbent[name]) > _floor(value)
        if prefer_up:
            stack.append(down)
            stack.append(up)
        else:
            stack.append(up)
            stack.append(down)

    def _complete_model(self, point: dict[str, Fraction],
                        boxes: dict[str, Box]) -> dict[str, bool | Fraction]:
        model: dict[str, bool | Fraction] = {}
        for name, info in self.infos.items():
            lo, hi = boxes[name]
            if name in point:
                value = point[name]
            elif lo is not None and lo == hi:
                value = lo
            else:
                value = _default_value(info, lo, hi)
                value = _num(value)
            if info.kind == "bool":
                model[name] = value == 1
            else:
                model[name] = value
        return model

    def _violated_indicator(self, model, boxes: dict[str, Box]):
        for guard, when, row in self.indicators:
            lo, hi = boxes[guard]
            if lo == hi:
                continue  # already decided; active rows were enforced
            if _num(model[guard]) == (ONE if when else ZERO) and not _row_holds(row, model):
                return guard
        return None


def _is_fixed(box: Box) -> bool:
    lo, hi = box
    return lo is not None and lo == hi


def _num(value: bool | Fraction) -> Fraction:
    if isinstance(value, bool):
        return ONE if value else ZERO
    return value


def _default_value(info: _VarInfo, lo: Fraction | None, hi: Fraction | None):
    if info.kind == "bool":
        return lo if lo is not None and lo == hi else ZERO
    if lo is not None:
        return lo
    if hi is not None:
        return hi
    return ZERO


def _row_holds(row: LinRow, model) -> bool:
    total = sum((c * _num(model[v]) for c, v in row.terms), ZERO)
    if row.op == "<=":
        return total <= row.rhs
    if row.op == ">=":
        return total >= row.rhs
    return total == row.rhs


def _activity(terms, boxes) -> tuple[Fraction | None, Fraction | None]:
    lo_total: Fraction | None = ZERO
    hi_total: Fraction | None = ZERO
    for coeff, name in terms:
        lo, hi = boxes[name]
        t_lo = lo if coeff > 0 else hi
        t_hi = hi if coeff > 0 else lo
        lo_total = None if (lo_total is None or t_lo is None) else lo_total + coeff * t_lo
        hi_total = None if (hi_total is None or t_hi is None) else hi_total + coeff * t_hi
    return lo_total, hi_total
