"""One-shot planning: preprocess, gate, encode, extend, extract, validate.

The pipeline builds the net, infers bounds, and gates on the relaxed
system: an infeasible relaxation is a proof that no plan exists at any
horizon, and the explanation machinery turns it into minimal conflicting
goal sets before any solver state is created.  Feasible-looking problems
get invariants, forward/backward reachable sets, a horizon lower bound,
and then the incremental encode-check-extend loop: the goal and backward
bindings ride as per-check assumptions, so extending the horizon never
invalidates solver work.

Problems whose relaxation looks feasible but that have no plan terminate
only through the horizon cap (RESOURCE_LIMIT): the relaxation offers no
completeness mechanism for that case, and neither does this planner.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import permutations

from .domains import apply_action, satisfies_goal
from .encode import condition_expr, encode_step, step_name
from .expr import FALSE, Const, Expr, linrel, not_, pval, var as evar
from .petri import PetriNet, build_petri, infer_bounds
from .problem import (
    BoolAssign,
    BoolLit,
    Problem,
    satisfies_condition,
    validate_problem,
)
from .reach import Direction, ReachableSets, horizon_lower_bound, propagate
from .relax import (
    Explanation,
    MutexGroup,
    RelaxedSystem,
    RelaxStatus,
    analyze_invariants,
    build_relaxed_system,
    check_goal_reachable,
    explain_infeasibility,
)
from .solve import NodeLimitError, SolveOutcome, SolverState

DEFAULT_MAX_HORIZON = 64


class PlanStatus(Enum):
    PLAN = "plan"
    INFEASIBLE = "infeasible"
    RESOURCE_LIMIT = "resource-limit"


@dataclass(frozen=True)
class Plan:
    steps: tuple[tuple[str, ...], ...]  # parallel steps, each sorted for output
    linearization: tuple[str, ...]
    horizon: int


@dataclass(frozen=True)
class PlanOutcome:
    status: PlanStatus
    plan: Plan | None = None
    explanation: Explanation | None = None
    detail: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    nodes: int = 0
    horizon_lower: int = 0


@dataclass
class PlanOptions:
    max_horizon: int = DEFAULT_MAX_HORIZON
    workers: int = 1
    node_limit: int = 1_000_000


@dataclass
class Analysis:
    """Cached preprocessing artifacts shared by the planner and sessions."""

    net: PetriNet
    system: RelaxedSystem
    relax_status: RelaxStatus
    invariants: list[MutexGroup]
    forward: ReachableSets
    backward: ReachableSets
    horizon_lower: int
    timings: dict[str, float]


def preprocess(problem: Problem, workers: int = 1) -> Analysis:
    """Net construction through reachable sets; all polynomial-time stages."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    net = infer_bounds(build_petri(problem))
    timings["petri"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    system = build_relaxed_system(net)
    relax_status = check_goal_reachable(system, problem.goal)
    timings["relax"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    invariants = analyze_invariants(system, workers=workers)
    timings["invariants"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    forward = propagate(net, Direction.FORWARD,
                        extra_constraints=problem.constraints)
    backward = propagate(net, Direction.BACKWARD,
                         extra_constraints=problem.constraints)
    lower = horizon_lower_bound(forward, backward, net)
    timings["reach"] = time.perf_counter() - t0

    return Analysis(net, system, relax_status, invariants, forward, backward,
                    lower, timings)


class HorizonSolver:
    """Incrementally extended step encoding over one SolverState.

    Sessions keep this object alive across updates: encodings and global
    constraints stay asserted forever, while goals and backward bindings
    only ever travel as per-check assumptions.
    """

    def __init__(self, analysis: Analysis, node_limit: int = 1_000_000):
        self.analysis = analysis
        self.state = SolverState(node_limit=node_limit)
        self.encoded = 0

    @property
    def net(self) -> PetriNet:
        return self.analysis.net

    def constants_at(self, k: int) -> dict:
        return self.analysis.forward.at(k).places

    def ensure_horizon(self, h: int) -> None:
        while self.encoded < h:
            k = self.encoded + 1
            enc = encode_step(
                self.net, k,
                invariants=self.analysis.invariants,
                extra_constraints=self.net.problem.constraints,
                constants_prev=self.constants_at(k - 1),
                constants_cur=self.constants_at(k),
            )
            for name, kind, lo, hi in enc.declarations:
                self.state.declare(name, kind, lo, hi)
            for assertion in enc.assertions:
                self.state.assert_expr(assertion)
            self.encoded = k

    def assert_step_constraints(self, conditions, from_step: int = 1) -> None:
        """Push newly added global constraints into already-encoded steps."""
        for k in range(from_step, self.encoded + 1):
            constants = {step_name(n, k): v
                         for n, v in self.constants_at(k).items()}
            for cond in conditions:
                e = pval(condition_expr(cond, k), constants)
                if isinstance(e, Const) and e.value is True:
                    continue
                self.state.assert_expr(e)

    def assert_invariant_groups(self, groups) -> None:
        """Assert newly proved invariant groups at every encoded step."""
        from .expr import at_most, exactly
        from .relax import GroupKind
        for k in range(1, self.encoded + 1):
            constants = {step_name(n, k): v
                         for n, v in self.constants_at(k).items()}
            for group in groups:
                members = (step_name(m, k) for m in group.members)
                e = (exactly(members, 1) if group.kind is GroupKind.EXACTLY_ONE
                     else at_most(members, 1))
                e = pval(e, constants)
                if isinstance(e, Const) and e.value is True:
                    continue
                self.state.assert_expr(e)

    def assert_forward_bindings(self, old_forward: ReachableSets) -> None:
        """Newly pinned forward bindings become assertions at encoded steps."""
        for k in range(1, self.encoded + 1):
            old = old_forward.at(k)
            new = self.analysis.forward.at(k)
            for name, value in new.places.items():
                if name in old.places:
                    continue
                if isinstance(value, bool):
                    v = evar(step_name(name, k))
                    self.state.assert_expr(v if value else not_(v))
                else:
                    self.state.assert_expr(
                        linrel([(Fraction(1), step_name(name, k))], "=", value))
        # Transition slot k fires out of state k; slots 0..encoded-1 exist.
        for slot in range(0, self.encoded):
            old_d = old_forward.at(slot).disabled
            new_d = self.analysis.forward.at(slot).disabled
            for tname in sorted(new_d - old_d):
                self.state.assert_expr(not_(evar(step_name(tname, slot))))

    def assumptions_for(self, h: int, goal, backward: ReachableSets) -> list[Expr]:
        out: list[Expr] = []
        constants_h = {step_name(n, h): v
                       for n, v in self.constants_at(h).items()}
        for cond in goal:
            out.append(pval(condition_expr(cond, h), constants_h))
        for j in range(0, h + 1):
            bindings = backward.at(j)
            step = h - j
            if step >= 1:
                constants_s = {step_name(n, step): v
                               for n, v in self.constants_at(step).items()}
                for name, value in bindings.places.items():
                    if isinstance(value, bool):
                        e = pval(condition_expr(BoolLit(name, value), step),
                                 constants_s)
                    else:
                        e = pval(linrel([(Fraction(1), step_name(name, step))],
                                        "=", value), constants_s)
                    out.append(e)
            elif step == 0:
                init = self.net.init_marking
                for name, value in bindings.places.items():
                    if init[name] != value:
                        out.append(FALSE)
            slot = h - j - 1
            if slot >= 0:
                for tname in sorted(bindings.disabled):
                    out.append(not_(evar(step_name(tname, slot))))
        return out

    def check_at(self, h: int, goal, backward: ReachableSets):
        self.ensure_horizon(h)
        return self.state.check_assuming(self.assumptions_for(h, goal, backward))


def plan(problem: Problem, opts: PlanOptions | None = None) -> PlanOutcome:
    """Full pipeline; returns a validated plan, an explanation, or a limit."""
    opts = opts or PlanOptions()
    diagnostics = validate_problem(problem)
    if diagnostics:
        raise ValueError("invalid problem: " + "; ".join(map(str, diagnostics)))

    analysis = preprocess(problem, workers=opts.workers)
    timings = dict(analysis.timings)
    if analysis.relax_status is RelaxStatus.INFEASIBLE:
        t0 = time.perf_counter()
        explanation = explain_infeasibility(analysis.system, problem.goal)
        timings["explain"] = time.perf_counter() - t0
        return PlanOutcome(PlanStatus.INFEASIBLE, explanation=explanation,
                           timings=timings, horizon_lower=analysis.horizon_lower)

    if satisfies_goal(problem, problem.init):
        return PlanOutcome(PlanStatus.PLAN, plan=Plan((), (), 0),
                           timings=timings, horizon_lower=analysis.horizon_lower)

    solver = HorizonSolver(analysis, node_limit=opts.node_limit)
    t0 = time.perf_counter()
    outcome = _horizon_loop(solver, problem, analysis, opts.max_horizon)
    timings["solve"] = time.perf_counter() - t0
    return PlanOutcome(outcome.status, plan=outcome.plan,
                       explanation=outcome.explanation, detail=outcome.detail,
                       timings=timings, nodes=solver.state.total_nodes,
                       horizon_lower=analysis.horizon_lower)


def _horizon_loop(solver: HorizonSolver, problem: Problem, analysis: Analysis,
                  max_horizon: int) -> PlanOutcome:
    h = max(analysis.horizon_lower, 1)
    while h <= max_horizon:
        try:
            res = solver.check_at(h, problem.goal, analysis.backward)
        except NodeLimitError as exc:
            return PlanOutcome(PlanStatus.RESOURCE_LIMIT, detail=str(exc))
        if res.outcome is SolveOutcome.SAT:
            extracted = extract_plan(res.model, solver.net, h,
                                     solver.analysis.forward)
            verdict = validate_plan(problem, extracted)
            if verdict is not VALID:
                raise AssertionError(f"extracted plan failed validation: {verdict}")
            return PlanOutcome(PlanStatus.PLAN, plan=extracted)
        h += 1
    return PlanOutcome(PlanStatus.RESOURCE_LIMIT,
                       detail=f"no plan within horizon {max_horizon}")


# ── Extraction ────────────────────────────────────────────────────────────

def extract_plan(model: dict, net: PetriNet, horizon: int,
                 forward: ReachableSets) -> Plan:
    """Read fired transitions per step and linearize enabling-first."""
    problem = net.problem
    steps: list[tuple[str, ...]] = []
    linearization: list[str] = []
    by_name = {a.name: a for a in problem.actions}
    for k in range(1, horizon + 1):
        fired = []
        for tname in net.transitions:
            value = model.get(step_name(tname, k - 1))
            if value is True:
                fired.append(tname)
        ordered = _enabling_order([by_name[t] for t in fired])
        steps.append(tuple(sorted(fired)))
        linearization.extend(a.name for a in ordered)
    return Plan(tuple(steps), tuple(linearization), horizon)


def _enabling_order(actions: list) -> list:
    """Effects that establish another's precondition go first; ties by name."""
    actions = sorted(actions, key=lambda a: a.name)
    before: dict[str, set[str]] = {a.name: set() for a in actions}
    for t in actions:
        t_sets = {(e.var, e.value) for e in t.eff if isinstance(e, BoolAssign)}
        for u in actions:
            if u.name == t.name:
                continue
            needs = {(c.var, c.polarity) for c in u.pre if isinstance(c, BoolLit)}
            if t_sets & needs:
                before[u.name].add(t.name)
    ordered = []
    remaining = {a.name: a for a in actions}
    while remaining:
        ready = [n for n in sorted(remaining)
                 if not (before[n] & set(remaining))]
        if not ready:
            ready = sorted(remaining)  # cycle: any order is valid (no conflicts)
        name = ready[0]
        ordered.append(remaining.pop(name))
    return ordered


# ── Validation ────────────────────────────────────────────────────────────

VALID = "valid"


@dataclass(frozen=True)
class Invalid:
    step: int | str
    reason: str


def validate_plan(problem: Problem, plan: Plan):
    """Replay the linearization exactly; audit small steps under all orders.

    Global constraints are checked at step boundaries, matching the
    encoding's per-step assertions.
    """
    by_name = {a.name: a for a in problem.actions}
    state = dict(problem.init)
    cursor = 0
    for step_idx, step in enumerate(plan.steps):
        segment = list(plan.linearization[cursor:cursor + len(step)])
        cursor += len(step)
        if sorted(segment) != sorted(step):
            return Invalid(step_idx, "linearization does not match step set")
        entry_state = dict(state)
        for name in segment:
            action = by_name.get(name)
            if action is None:
                return Invalid(step_idx, f"unknown action {name!r}")
            if not _pre_and_bounds_ok(problem, state, action):
                return Invalid(step_idx, f"precondition or bounds fail for {name!r}")
            state = apply_action(problem, state, action)
        for cond in problem.constraints:
            if not satisfies_condition(problem, state, cond):
                return Invalid(step_idx, "global constraint violated")
        if len(step) <= 4 and len(step) > 1:
            for order in permutations(segment):
                replay = dict(entry_state)
                for name in order:
                    action = by_name[name]
                    if not _pre_and_bounds_ok(problem, replay, action):
                        return Invalid(step_idx,
                                       f"order {order} violates a precondition")
                    replay = apply_action(problem, replay, action)
                if replay != state:
                    return Invalid(step_idx, f"order {order} diverges")
    if cursor != len(plan.linearization):
        return Invalid("final", "linearization longer than steps")
    for i, cond in enumerate(problem.goal):
        if not satisfies_condition(problem, state, cond):
            return Invalid("final", f"goal condition {i} unsatisfied")
    return VALID


def _pre_and_bounds_ok(problem: Problem, state, action) -> bool:
    for cond in action.pre:
        if not satisfies_condition(problem, state, cond):
            return False
    for eff in action.eff:
        if not isinstance(eff, BoolAssign):
            var = problem.var(eff.var)
            new = state[eff.var] + eff.delta
            if var.lower is not None and new < var.lower:
                return False
            if var.upper is not None and new > var.upper:
                return False
    return True
