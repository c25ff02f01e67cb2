"""Sequential planning sessions: update composition and incremental solving.

A session wraps one problem and the cached analysis around it.  Two update
forms exist:

* GoalChange(delete indices, add conditions): the goal list is edited
  (deletes first, then appends).  The net, relaxation template, invariants
  and forward sets are kept by object identity; only backward reachability
  and the relaxation feasibility verdict are recomputed.  Goals never
  become solver assertions, so the solver state is untouched.
* AddConstraints(conditions): constraints join the problem, the relaxation
  gains their rows, and invariants, goal reachability, and both reachable
  sets are recomputed (all polynomial).  New per-step assertions (the
  constraints at every already-encoded step, any newly proved invariant
  groups, and newly pinned forward bindings) push into the existing solver
  state.

solve_round reuses the retained solver: already-encoded steps stay, the
goal and backward bindings ride as assumptions, and lower horizons are
probed by assuming the goal at earlier steps.  The journal is append-only
line-delimited records; replaying it reconstructs an equivalent session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .domains import satisfies_goal
from .planner import (
    VALID,
    Analysis,
    HorizonSolver,
    Plan,
    PlanOutcome,
    PlanStatus,
    extract_plan,
    preprocess,
    validate_plan,
)
from .problem import (
    Condition,
    Problem,
    ProblemValidationError,
    condition_doc,
    parse_condition_doc,
    parse_problem,
    serialize_problem,
    validate_problem,
)
from .reach import Direction, horizon_lower_bound, propagate
from .relax import (
    RelaxStatus,
    analyze_invariants,
    build_relaxed_system,
    check_goal_reachable,
    explain_infeasibility,
)
from .solve import NodeLimitError, SolveOutcome


@dataclass(frozen=True)
class GoalChange:
    add: tuple[Condition, ...] = ()
    delete: tuple[int, ...] = ()


@dataclass(frozen=True)
class AddConstraints:
    constraints: tuple[Condition, ...] = ()


Update = GoalChange | AddConstraints


class UpdateError(Exception):
    """Invalid update; the session is left unchanged."""


class Session:
    def __init__(self, session_id: str, problem: Problem, workers: int = 1,
                 node_limit: int = 1_000_000, max_horizon: int = 64):
        diagnostics = validate_problem(problem)
        if diagnostics:
            raise ProblemValidationError(diagnostics)
        self.id = session_id
        self.round = 0
        self.workers = workers
        self.max_horizon = max_horizon
        self.problem = problem
        self.analysis: Analysis = preprocess(problem, workers=workers)
        self.solver = HorizonSolver(self.analysis, node_limit=node_limit)
        self.relax_status: RelaxStatus = self.analysis.relax_status
        self.last_outcome: PlanOutcome | None = None
        self.journal: list[dict] = []
        self._log({"event": "create", "problem": serialize_problem(problem)})

    # ── Journal ───────────────────────────────────────────────────────

    def _log(self, record: dict) -> None:
        self.journal.append({"round": self.round, **record})

    def journal_text(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.journal)

    # ── Updates ───────────────────────────────────────────────────────

    def apply_update(self, update: Update) -> None:
        if isinstance(update, GoalChange):
            self._apply_goal_change(update)
        elif isinstance(update, AddConstraints):
            self._apply_add_constraints(update)
        else:
            raise UpdateError(f"unknown update type {type(update).__name__}")

    def _apply_goal_change(self, update: GoalChange) -> None:
        goal = self.problem.goal
        if len(set(update.delete)) != len(update.delete):
            raise UpdateError("duplicate delete indices")
        for idx in update.delete:
            if not (0 <= idx < len(goal)):
                raise UpdateError(f"goal index {idx} out of range")
        kept = tuple(c for i, c in enumerate(goal) if i not in set(update.delete))
        new_goal = kept + tuple(update.add)
        trial = self.problem.with_goal(new_goal)
        diagnostics = validate_problem(trial)
        if diagnostics:
            raise UpdateError("; ".join(map(str, diagnostics)))

        self.problem = trial
        net = replace(self.analysis.net, problem=trial, goal_marking=new_goal)
        backward = propagate(net, Direction.BACKWARD,
                             extra_constraints=trial.constraints)
        lower = horizon_lower_bound(self.analysis.forward, backward, net)
        # Net identity changes only in its goal view; the relaxation
        # template, invariants, and forward sets are reused untouched.
        self.analysis = replace(self.analysis, net=net, backward=backward,
                                horizon_lower=lower)
        self.solver.analysis = self.analysis
        self.relax_status = check_goal_reachable(self.analysis.system, new_goal)
        self.round += 1
        self._log({"event": "update",
                   "update": update_doc(update),
                   "relaxation": self.relax_status.value})

    def _apply_add_constraints(self, update: AddConstraints) -> None:
        if not update.constraints:
            raise UpdateError("empty constraint list")
        trial = self.problem.with_constraints(
            self.problem.constraints + tuple(update.constraints))
        diagnostics = validate_problem(trial)
        if diagnostics:
            raise UpdateError("; ".join(map(str, diagnostics)))

        old_forward = self.analysis.forward
        old_invariants = {g.members: g for g in self.analysis.invariants}
        self.problem = trial
        net = replace(self.analysis.net, problem=trial, goal_marking=trial.goal)
        system = build_relaxed_system(net)
        invariants = analyze_invariants(system, workers=self.workers)
        forward = propagate(net, Direction.FORWARD,
                            extra_constraints=trial.constraints)
        backward = propagate(net, Direction.BACKWARD,
                             extra_constraints=trial.constraints)
        lower = horizon_lower_bound(forward, backward, net)
        self.analysis = Analysis(net, system, self.analysis.relax_status,
                                 invariants, forward, backward, lower,
                                 self.analysis.timings)
        self.solver.analysis = self.analysis
        self.relax_status = check_goal_reachable(system, trial.goal)

        # Push the new knowledge into already-encoded steps.
        self.solver.assert_step_constraints(update.constraints)
        fresh_groups = [g for g in invariants
                        if old_invariants.get(g.members, None) is None
                        or old_invariants[g.members].kind is not g.kind]
        self.solver.assert_invariant_groups(fresh_groups)
        self.solver.assert_forward_bindings(old_forward)
        self.round += 1
        self._log({"event": "update",
                   "update": update_doc(update),
                   "relaxation": self.relax_status.value})

    # ── Solving ───────────────────────────────────────────────────────

    def solve_round(self, max_horizon: int | None = None) -> PlanOutcome:
        cap = max_horizon if max_horizon is not None else self.max_horizon
        outcome = self._solve(cap)
        self.last_outcome = outcome
        self._log({
            "event": "solve",
            "outcome": outcome.status.value,
            "horizon": outcome.plan.horizon if outcome.plan else None,
            "steps": [list(s) for s in outcome.plan.steps] if outcome.plan else None,
            "explanations": ([list(s) for s in outcome.explanation.goal_index_sets]
                             if outcome.explanation else None),
            "nodes": outcome.nodes,
        })
        return outcome

    def _solve(self, max_horizon: int) -> PlanOutcome:
        problem = self.problem
        if self.relax_status is RelaxStatus.INFEASIBLE:
            explanation = explain_infeasibility(self.analysis.system, problem.goal)
            return PlanOutcome(PlanStatus.INFEASIBLE, explanation=explanation,
                               horizon_lower=self.analysis.horizon_lower)
        if satisfies_goal(problem, problem.init):
            return PlanOutcome(PlanStatus.PLAN, plan=Plan((), (), 0),
                               horizon_lower=self.analysis.horizon_lower)
        nodes_before = self.solver.state.total_nodes
        h = max(self.analysis.horizon_lower, 1)
        while h <= max_horizon:
            try:
                res = self.solver.check_at(h, problem.goal, self.analysis.backward)
            except NodeLimitError as exc:
                return PlanOutcome(PlanStatus.RESOURCE_LIMIT, detail=str(exc),
                                   nodes=self.solver.state.total_nodes - nodes_before)
            if res.outcome is SolveOutcome.SAT:
                extracted = extract_plan(res.model, self.analysis.net, h,
                                         self.analysis.forward)
                verdict = validate_plan(problem, extracted)
                if verdict is not VALID:
                    raise AssertionError(f"extracted plan failed: {verdict}")
                return PlanOutcome(
                    PlanStatus.PLAN, plan=extracted,
                    nodes=self.solver.state.total_nodes - nodes_before,
                    horizon_lower=self.analysis.horizon_lower)
            h += 1
        return PlanOutcome(PlanStatus.RESOURCE_LIMIT,
                           detail=f"no plan within horizon {max_horizon}",
                           nodes=self.solver.state.total_nodes - nodes_before,
                           horizon_lower=self.analysis.horizon_lower)


def create_session(problem: Problem, session_id: str = "s0",
                   workers: int = 1, node_limit: int = 1_000_000,
                   max_horizon: int = 64) -> Session:
    return Session(session_id, problem, workers=workers, node_limit=node_limit,
                   max_horizon=max_horizon)


# ── Update documents (wire format and journal) ────────────────────────────

def update_doc(update: Update) -> dict:
    if isinstance(update, GoalChange):
        return {"goal_change": {"add": [condition_doc(c) for c in update.add],
                                "del": list(update.delete)}}
    return {"add_constraints": [condition_doc(c) for c in update.constraints]}


def parse_update_doc(raw: dict) -> Update:
    from .problem import ProblemFormatError
    if not isinstance(raw, dict) or len(raw) != 1:
        raise UpdateError("update must be a single-key object")
    if "goal_change" in raw:
        body = raw["goal_change"]
        if not isinstance(body, dict) or set(body) - {"add", "del"}:
            raise UpdateError("goal_change takes keys 'add' and 'del'")
        try:
            add = tuple(parse_condition_doc(c, f"$.add[{i}]")
                        for i, c in enumerate(body.get("add", [])))
        except ProblemFormatError as exc:
            raise UpdateError(str(exc)) from exc
        dels = body.get("del", [])
        if not all(isinstance(i, int) for i in dels):
            raise UpdateError("del must hold integer goal indices")
        return GoalChange(add=add, delete=tuple(dels))
    if "add_constraints" in raw:
        try:
            conds = tuple(parse_condition_doc(c, f"$.constraints[{i}]")
                          for i, c in enumerate(raw["add_constraints"]))
        except ProblemFormatError as exc:
            raise UpdateError(str(exc)) from exc
        return AddConstraints(conds)
    raise UpdateError("update must use key 'goal_change' or 'add_constraints'")


def replay_journal(text: str, workers: int = 1) -> Session:
    """Rebuild a session by re-running its journal records."""
    session: Session | None = None
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        event = record.get("event")
        if event == "create":
            problem = parse_problem(record["problem"])
            session = Session("replay", problem, workers=workers)
        elif session is None:
            raise ValueError("journal does not start with a create record")
        elif event == "update":
            session.apply_update(parse_update_doc(record["update"]))
        elif event == "solve":
            session.solve_round()
    if session is None:
        raise ValueError("empty journal")
    return session
