"""Exact rational simplex for feasibility and optimization.

Bounded-variable primal simplex over arbitrary-precision rationals: phase 1
minimizes artificial infeasibility, phase 2 the caller's objective.  There
is no tolerance anywhere; a FEASIBLE result carries a point that satisfies
every row and box with exact equality (checked before returning).

Anti-cycling is Bland's rule (lowest-index entering, lowest-index blocking
basic among ties).  A pivot-count ceiling converts pathological inputs into
a PivotLimitError instead of nontermination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_PIVOT_LIMIT = 10_000_000


class LpStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class PivotLimitError(Exception):
    """Simplex exceeded its pivot ceiling; treat as a resource failure."""


@dataclass(frozen=True)
class LinRow:
    terms: tuple[tuple[Fraction, str], ...]
    op: str  # "<=", ">=", "="
    rhs: Fraction


@dataclass
class LinProgram:
    variables: list[tuple[str, Fraction | None, Fraction | None]]
    rows: list[LinRow] = field(default_factory=list)
    objective: tuple[str, dict[str, Fraction]] | None = None  # ("min"|"max", coeffs)

    def add_var(self, name: str, lower: Fraction | None, upper: Fraction | None):
        self.variables.append((name, lower, upper))

    def add_row(self, terms, op: str, rhs: Fraction):
        self.rows.append(LinRow(tuple(terms), op, rhs))


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    point: dict[str, Fraction] | None = None
    objective_value: Fraction | None = None


def _check_point(lp: LinProgram, point: dict[str, Fraction]) -> None:
    for name, lo, hi in lp.variables:
        x = point[name]
        if lo is not None and x < lo:
            raise AssertionError(f"{name} below lower bound in returned point")
        if hi is not None and x > hi:
            raise AssertionError(f"{name} above upper bound in returned point")
    for row in lp.rows:
        total = sum((c * point[v] for c, v in row.terms), ZERO)
        ok = (total <= row.rhs if row.op == "<="
              else total >= row.rhs if row.op == ">="
              else total == row.rhs)
        if not ok:
            raise AssertionError("returned point violates a row exactly")


class _Simplex:
    """One solve over the dense standard-form tableau; not reusable."""

    def __init__(self, lp: LinProgram, pivot_limit: int):
        self.pivot_limit = pivot_limit
        self.pivots = 0
        self.infeasible_box = False
        self.infeasible_row = False

        self.names: list[str] = []
        self.lo: list[Fraction | None] = []
        self.hi: list[Fraction | None] = []
        self.index: dict[str, int] = {}
        for name, lo, hi in lp.variables:
            if name in self.index:
                raise ValueError(f"duplicate variable {name!r}")
            if lo is not None and hi is not None and lo > hi:
                self.infeasible_box = True
            self._new_col(name, lo, hi)
        self.n_struct = len(self.names)

        # Equality standard form: one slack column per inequality row.
        self.row_terms: list[dict[int, Fraction]] = []
        self.row_rhs: list[Fraction] = []
        self.row_slack: list[int | None] = []
        for row in lp.rows:
            terms: dict[int, Fraction] = {}
            for coeff, name in row.terms:
                j = self.index.get(name)
                if j is None:
                    raise ValueError(f"row references undeclared variable {name!r}")
                terms[j] = terms.get(j, ZERO) + coeff
            terms = {j: c for j, c in terms.items() if c != 0}
            if not terms:
                ok = (ZERO <= row.rhs if row.op == "<="
                      else ZERO >= row.rhs if row.op == ">="
                      else ZERO == row.rhs)
                if not ok:
                    self.infeasible_row = True
                continue
            slack = None
            if row.op == "<=":
                slack = self._new_col(f".s{len(self.row_terms)}", ZERO, None)
                terms[slack] = ONE
            elif row.op == ">=":
                slack = self._new_col(f".s{len(self.row_terms)}", None, ZERO)
                terms[slack] = ONE
            self.row_terms.append(terms)
            self.row_rhs.append(row.rhs)
            self.row_slack.append(slack)

    def _new_col(self, name: str, lo, hi) -> int:
        j = len(self.names)
        self.index[name] = j
        self.names.append(name)
        self.lo.append(lo)
        self.hi.append(hi)
        return j

    # ── Setup and main loop ───────────────────────────────────────────

    def solve(self, objective: dict[str, Fraction] | None, minimize: bool):
        """Returns (status, point, objective_value)."""
        if self.infeasible_box or self.infeasible_row:
            return LpStatus.INFEASIBLE, None, None

        m = len(self.row_terms)
        self.status: list[str] = []
        for j in range(len(self.names)):
            if self.lo[j] is not None:
                self.status.append("L")
            elif self.hi[j] is not None:
                self.status.append("U")
            else:
                self.status.append("F")

        # Crash basis: a row whose slack can absorb the start residual uses
        # the slack as its basic column; only the remaining rows pay for an
        # artificial (sign-flipped so the artificial starts >= 0).
        self.art_cols: list[int] = []
        plan: list[tuple[int, Fraction]] = []  # (basic col, row sign)
        for i in range(m):
            terms = self.row_terms[i]
            slack = self.row_slack[i]
            if slack is not None:
                resid = self.row_rhs[i] - sum(
                    c * self._bound_value(j)
                    for j, c in terms.items() if j != slack)
                if (self.lo[slack] == ZERO and resid >= 0) or \
                        (self.hi[slack] == ZERO and resid <= 0):
                    plan.append((slack, ONE))
                    continue
            resid = self.row_rhs[i] - sum(
                c * self._bound_value(j) for j, c in terms.items())
            art = self._new_col(f".a{i}", ZERO, None)
            self.art_cols.append(art)
            self.status.append("B")
            plan.append((art, -ONE if resid < 0 else ONE))

        # Sparse tableau: row dicts col -> nonzero coeff, rhs kept aside.
        self.width = len(self.names)
        self.T = []
        self.beta: list[Fraction] = []
        self.basis = []
        art_set = set(self.art_cols)
        for i, (basic, sign) in enumerate(plan):
            row = {j: sign * c for j, c in self.row_terms[i].items()}
            if basic in art_set:
                row[basic] = ONE
            self.T.append(row)
            self.beta.append(sign * self.row_rhs[i])
            self.basis.append(basic)
            self.status[basic] = "B"
        self.xB = self._basic_values()

        if self.art_cols:
            phase1 = [ZERO] * self.width
            for a in self.art_cols:
                phase1[a] = ONE
            outcome = self._iterate(phase1)
            if outcome is LpStatus.UNBOUNDED:
                raise AssertionError("phase 1 objective is bounded below by zero")
            art_set = set(self.art_cols)
            infeas = sum((self.xB[i] for i in range(m)
                          if self.basis[i] in art_set), ZERO)
            if infeas > 0:
                return LpStatus.INFEASIBLE, None, None
            for a in self.art_cols:
                self.lo[a] = ZERO
                self.hi[a] = ZERO

        if objective is None:
            return LpStatus.FEASIBLE, self._point(), None

        cost = [ZERO] * self.width
        for name, coeff in objective.items():
            j = self.index.get(name)
            if j is None or j >= self.n_struct:
                raise ValueError(f"objective references undeclared {name!r}")
            cost[j] = coeff if minimize else -coeff
        outcome = self._iterate(cost)
        if outcome is LpStatus.UNBOUNDED:
            return LpStatus.UNBOUNDED, None, None
        point = self._point()
        value = sum((coeff * point[name] for name, coeff in objective.items()), ZERO)
        return LpStatus.FEASIBLE, point, value

    def _bound_value(self, j: int) -> Fraction:
        # Start value of a nonbasic column: its finite bound, or 0 when free.
        if self.lo[j] is not None:
            return self.lo[j]
        if self.hi[j] is not None:
            return self.hi[j]
        return ZERO

    def _value_of(self, j: int) -> Fraction:
        st = self.status[j]
        if st == "L":
            return self.lo[j]
        if st == "U":
            return self.hi[j]
        if st == "F":
            return ZERO
        raise AssertionError("value of a basic column is held in xB")

    def _basic_values(self) -> list[Fraction]:
        vals = []
        for i in range(len(self.basis)):
            total = self.beta[i]
            for j, c in self.T[i].items():
                if self.status[j] == "B":
                    continue
                v = self._value_of(j)
                if v != 0:
                    total -= c * v
            vals.append(total)
        return vals

    def _iterate(self, cost: list[Fraction]) -> LpStatus:
        """Minimize cost over the current basis until optimal or unbounded.

        Pricing is Dantzig (steepest reduced cost) until a run of degenerate
        pivots, then Bland's rule permanently, which restores the
        anti-cycling termination guarantee.
        """
        m = len(self.basis)
        bland = False
        stall = 0
        while True:
            self.pivots += 1
            if self.pivots > self.pivot_limit:
                raise PivotLimitError(f"exceeded {self.pivot_limit} pivots")
            xB = self.xB
            z = list(cost)
            for i in range(m):
                cb = cost[self.basis[i]]
                if cb != 0:
                    for j, v in self.T[i].items():
                        z[j] -= cb * v
            entering, direction = -1, 0
            best_score: Fraction | None = None
            for j in range(self.width):
                if self.status[j] == "B":
                    continue
                if self.lo[j] is not None and self.lo[j] == self.hi[j]:
                    continue  # fixed column
                zj = z[j]
                st = self.status[j]
                if zj < 0 and st in ("L", "F"):
                    score, d = -zj, 1
                elif zj > 0 and st in ("U", "F"):
                    score, d = zj, -1
                else:
                    continue
                if bland:
                    entering, direction = j, d
                    break
                if best_score is None or score > best_score:
                    best_score, entering, direction = score, j, d
            if entering < 0:
                return LpStatus.FEASIBLE  # optimal for this cost vector
            e, d = entering, direction

            t_best: Fraction | None = None
            leave_row = -1
            if self.lo[e] is not None and self.hi[e] is not None:
                t_best = self.hi[e] - self.lo[e]  # bound flip distance
            for i in range(m):
                coef = self.T[i].get(e)
                if coef is None:
                    continue
                delta = -d * coef  # change of basic i per unit step of e
                bi = self.basis[i]
                if delta > 0:
                    if self.hi[bi] is None:
                        continue
                    t_i = (self.hi[bi] - xB[i]) / delta
                else:
                    if self.lo[bi] is None:
                        continue
                    t_i = (self.lo[bi] - xB[i]) / delta
                if t_i < 0:
                    t_i = ZERO  # degenerate: basic already pinned at its bound
                if t_best is None or t_i < t_best:
                    t_best, leave_row = t_i, i
                elif t_i == t_best and leave_row >= 0 and bi < self.basis[leave_row]:
                    leave_row = i
            if t_best is None:
                return LpStatus.UNBOUNDED
            if t_best == 0:
                stall += 1
                if stall >= 50:
                    bland = True
            else:
                stall = 0
            if leave_row < 0:
                # The entering variable's own range binds first: bound flip.
                self.status[e] = "U" if self.status[e] == "L" else "L"
                if t_best != 0:
                    for i in range(m):
                        coef = self.T[i].get(e)
                        if coef is not None:
                            self.xB[i] -= d * coef * t_best
                continue
            self._pivot(leave_row, e, d, t_best, xB)

    def _pivot(self, r: int, e: int, d: int, t: Fraction,
               xB: list[Fraction]) -> None:
        leaving = self.basis[r]
        entering_value = self._value_of(e) + d * t
        if t != 0:
            for i in range(len(self.T)):
                coef = self.T[i].get(e)
                if coef is not None:
                    self.xB[i] -= d * coef * t
        landed = self.xB[r]
        if self.lo[leaving] is not None and landed == self.lo[leaving]:
            self.status[leaving] = "L"
        elif self.hi[leaving] is not None and landed == self.hi[leaving]:
            self.status[leaving] = "U"
        else:
            raise AssertionError("leaving variable did not land on a bound")
        self.xB[r] = entering_value

        row_r = self.T[r]
        piv = row_r[e]
        if piv != ONE:
            inv = ONE / piv
            for j in list(row_r):
                row_r[j] *= inv
            self.beta[r] *= inv
        for i in range(len(self.T)):
            if i == r:
                continue
            row_i = self.T[i]
            factor = row_i.get(e)
            if factor is None:
                continue
            for j, v in row_r.items():
                new = row_i.get(j, ZERO) - factor * v
                if new == 0:
                    row_i.pop(j, None)
                else:
                    row_i[j] = new
            self.beta[i] -= factor * self.beta[r]
        self.basis[r] = e
        self.status[e] = "B"

    def _point(self) -> dict[str, Fraction]:
        xB = self.xB
        values: dict[str, Fraction] = {}
        for j in range(self.n_struct):
            if self.status[j] != "B":
                values[self.names[j]] = self._value_of(j)
        for i, bi in enumerate(self.basis):
            if bi < self.n_struct:
                values[self.names[bi]] = xB[i]
        return values


def lp_feasible(lp: LinProgram, pivot_limit: int = DEFAULT_PIVOT_LIMIT) -> LpResult:
    """Phase-1 feasibility; FEASIBLE results carry an exact point."""
    simplex = _Simplex(lp, pivot_limit)
    status, point, _ = simplex.solve(None, minimize=True)
    if status is LpStatus.FEASIBLE:
        _check_point(lp, point)
        return LpResult(LpStatus.FEASIBLE, point)
    return LpResult(status)


def lp_optimize(lp: LinProgram, pivot_limit: int = DEFAULT_PIVOT_LIMIT) -> LpResult:
    """Optimize lp.objective; returns an optimal basic solution."""
    if lp.objective is None:
        raise ValueError("lp_optimize needs an objective")
    sense, coeffs = lp.objective
    simplex = _Simplex(lp, pivot_limit)
    status, point, value = simplex.solve(dict(coeffs), minimize=(sense == "min"))
    if status is LpStatus.FEASIBLE:
        _check_point(lp, point)
        actual = sum((c * point[v] for v, c in coeffs.items()), ZERO)
        if actual != value:
            raise AssertionError("objective value mismatch")
        return LpResult(LpStatus.FEASIBLE, point, value)
    return LpResult(status)


# ── CPLEX LP text export ──────────────────────────────────────────────────

def _lp_num(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _lp_terms(terms) -> str:
    parts = []
    for coeff, name in terms:
        if coeff < 0:
            parts.append(f"- {_lp_num(-coeff)} {name}")
        else:
            prefix = "+ " if parts else ""
            parts.append(f"{prefix}{_lp_num(coeff)} {name}")
    return " ".join(parts) if parts else "0"


def to_lp_format(lp: LinProgram, integer_vars: set[str] | None = None) -> str:
    """Fixed-format LP text for external cross-checking (not re-imported).

    Non-dyadic rationals are emitted as shortest round-tripping floats, so
    the text is an approximation for exotic coefficients; the in-process
    path stays exact.
    """
    integer_vars = integer_vars or set()
    out = []
    if lp.objective is not None:
        sense, coeffs = lp.objective
        out.append("Maximize" if sense == "max" else "Minimize")
        terms = tuple((c, v) for v, c in sorted(coeffs.items()))
        out.append(" obj: " + _lp_terms(terms))
    else:
        out.append("Minimize")
        out.append(" obj: 0")
    out.append("Subject To")
    for i, row in enumerate(lp.rows):
        out.append(f" c{i}: {_lp_terms(row.terms)} {row.op} {_lp_num(row.rhs)}")
    out.append("Bounds")
    for name, lo, hi in lp.variables:
        if lo is None and hi is None:
            out.append(f" {name} free")
        elif lo is None:
            out.append(f" -inf <= {name} <= {_lp_num(hi)}")
        elif hi is None:
            out.append(f" {name} >= {_lp_num(lo)}")
        else:
            out.append(f" {_lp_num(lo)} <= {name} <= {_lp_num(hi)}")
    generals = [name for name, _, _ in lp.variables if name in integer_vars]
    if generals:
        out.append("General")
        out.append(" " + " ".join(generals))
    out.append("End")
    return "\n".join(out) + "\n"
