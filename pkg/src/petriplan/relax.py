"""Relaxed reachability analysis: the core feasibility and invariant engine.

Summing transition firings over all steps collapses the marking equation to

    p(h) = p(0) + C * tau + s+ - s-

with tau >= 0 counting total firings and per-place slacks compensating
boolean rebinds: s- absorbs set-true firings on an already-true place, s+
set-false firings on an already-false place.  Slacks are pinned to zero
wherever no rebind can occur, and for numeric places.  Relaxing everything
to rationals gives a linear program whose infeasibility under a goal is a
proof that the goal is unreachable at any horizon; feasibility proves
nothing.

The same system yields invariants: a pair of boolean places is mutex when
pinning both to 1 makes the relaxation infeasible.  (Restricting the check
to the pair's two rows alone would be cheaper but loses any mutex whose
flow passes through other places, so all flow rows stay in.)  Pairs grow
greedily into clique groups (sum <= 1), and a group upgrades to one-hot
(sum = 1) when a member starts true and every transition disabling a
member enables another.

Infeasibility explanations are minimal subsets of goal conditions: complete
enumeration in increasing cardinality with superset pruning for small
goals, and for large ones a disable-minimization MIP whose optimal disable
sets are shrunk to minimal conflict sets, with blocking rows forbidding
already-disabled combinations.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .lp import LinProgram, LinRow, LpStatus, lp_feasible
from .petri import PetriNet
from .problem import BoolLit, Condition, VarKind

ENUMERATION_THRESHOLD = 12
MAX_CONFLICT_SETS = 64


class RelaxStatus(Enum):
    POSSIBLY_FEASIBLE = "possibly-feasible"
    INFEASIBLE = "infeasible"


class GroupKind(Enum):
    AT_MOST_ONE = "at-most-one"
    EXACTLY_ONE = "exactly-one"


@dataclass(frozen=True)
class MutexGroup:
    members: tuple[str, ...]
    kind: GroupKind


@dataclass(frozen=True)
class Explanation:
    goal_index_sets: tuple[tuple[int, ...], ...]
    truncated: bool = False


def ph(name: str) -> str:
    return f"ph:{name}"


def tau(name: str) -> str:
    return f"tau:{name}"


@dataclass(frozen=True)
class RelaxedSystem:
    net: PetriNet
    variables: tuple[tuple[str, Fraction | None, Fraction | None], ...]
    flow_rows: tuple[LinRow, ...]        # one per place, same order
    constraint_rows: tuple[LinRow, ...]  # from global problem constraints

    def template(self) -> LinProgram:
        lp = LinProgram(variables=list(self.variables))
        lp.rows.extend(self.flow_rows)
        lp.rows.extend(self.constraint_rows)
        return lp


def condition_row(cond: Condition) -> LinRow:
    """Translate a goal/constraint condition to a row over the p(h) columns."""
    if isinstance(cond, BoolLit):
        return LinRow(((Fraction(1), ph(cond.var)),), "=",
                      Fraction(1 if cond.polarity else 0))
    return LinRow(tuple((c, ph(v)) for c, v in cond.terms), cond.op, cond.rhs)


def build_relaxed_system(net: PetriNet) -> RelaxedSystem:
    """Template LP over (p(h), tau, s+, s-) with slack zeroing applied."""
    problem = net.problem
    variables: list[tuple[str, Fraction | None, Fraction | None]] = []
    for v in problem.variables:
        lo, hi = net.bounds[v.id]
        variables.append((ph(v.name), lo, hi))
    for name in net.transitions:
        variables.append((tau(name), Fraction(0), None))
    splus: list[str] = []
    sminus: list[str] = []
    for v in problem.variables:
        boolean = v.kind is VarKind.BOOLEAN
        sp_hi = None if boolean and net.rebind_to_false[v.id] else Fraction(0)
        sm_hi = None if boolean and net.rebind_to_true[v.id] else Fraction(0)
        sp, sm = f"s+:{v.name}", f"s-:{v.name}"
        variables.append((sp, Fraction(0), sp_hi))
        variables.append((sm, Fraction(0), sm_hi))
        splus.append(sp)
        sminus.append(sm)

    rows = []
    for v in problem.variables:
        i = v.id
        terms: list[tuple[Fraction, str]] = [(Fraction(1), ph(v.name))]
        for j, tname in enumerate(net.transitions):
            w = net.incidence.get((i, j))
            if w is not None:
                terms.append((-w, tau(tname)))
        terms.append((Fraction(-1), splus[i]))
        terms.append((Fraction(1), sminus[i]))
        init = problem.init[v.name]
        rhs = Fraction(1 if init else 0) if isinstance(init, bool) else init
        rows.append(LinRow(tuple(terms), "=", rhs))

    constraint_rows = tuple(condition_row(c) for c in problem.constraints)
    return RelaxedSystem(net, tuple(variables), tuple(rows), constraint_rows)


def _feasible_with(system: RelaxedSystem, extra_rows) -> bool:
    lp = system.template()
    lp.rows.extend(extra_rows)
    return lp_feasible(lp).status is LpStatus.FEASIBLE


def check_goal_reachable(system: RelaxedSystem,
                         goal: tuple[Condition, ...]) -> RelaxStatus:
    """INFEASIBLE is a proof of planning infeasibility (no horizon works)."""
    if _feasible_with(system, [condition_row(c) for c in goal]):
        return RelaxStatus.POSSIBLY_FEASIBLE
    return RelaxStatus.INFEASIBLE


# ── Mutex invariants ──────────────────────────────────────────────────────

def _pair_lp(system: RelaxedSystem, u: int, v: int) -> LinProgram:
    """The relaxed system with both places pinned true.

    Restricting to the two rows of u and v alone is cheaper but misses any
    mutex whose flow passes through other places (a third location can feed
    a token into the pair unseen), so the check keeps every flow row; the
    infeasibility proposition makes that equally sound and strictly
    stronger.
    """
    net = system.net
    pinned = {ph(net.places[u]), ph(net.places[v])}
    lp = LinProgram(variables=[])
    for name, lo, hi in system.variables:
        if name in pinned:
            lp.add_var(name, Fraction(1), Fraction(1))
        else:
            lp.add_var(name, lo, hi)
    lp.rows.extend(system.flow_rows)
    lp.rows.extend(system.constraint_rows)
    return lp


def find_mutex_pairs(system: RelaxedSystem, workers: int = 1) -> list[tuple[str, str]]:
    """All boolean place pairs whose relaxation rules out both-true.

    Pairs already both true initially are skipped as trivially non-mutex.
    Checks are independent pure LP solves, distributed over a thread pool.
    """
    net = system.net
    problem = net.problem
    booleans = [v for v in problem.variables if v.kind is VarKind.BOOLEAN]
    candidates = [
        (u.id, v.id)
        for u, v in itertools.combinations(booleans, 2)
        if not (problem.init[u.name] is True and problem.init[v.name] is True)
    ]

    def check(pair: tuple[int, int]) -> bool:
        return lp_feasible(_pair_lp(system, *pair)).status is LpStatus.INFEASIBLE

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(check, candidates))
    else:
        verdicts = [check(pair) for pair in candidates]
    return [(net.places[u], net.places[v])
            for (u, v), mutex in zip(candidates, verdicts) if mutex]


def build_mutex_groups(pairs: list[tuple[str, str]], net: PetriNet) -> list[MutexGroup]:
    """Greedy clique cover; uncovered pairs are retained as 2-member groups."""
    pid = {name: i for i, name in enumerate(net.places)}
    adj: dict[int, set[int]] = {}
    pair_ids = set()
    for a, b in pairs:
        u, v = sorted((pid[a], pid[b]))
        if u == v:
            raise ValueError("mutex pairs must be irreflexive")
        pair_ids.add((u, v))
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    groups: list[tuple[int, ...]] = []
    unassigned = set(adj)
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
            groups.append(tuple(members))
        unassigned -= set(members)

    covered = {frozenset(p) for g in groups
               for p in itertools.combinations(g, 2)}
    for u, v in sorted(pair_ids):
        if frozenset((u, v)) not in covered:
            groups.append((u, v))
    groups.sort()
    return [MutexGroup(tuple(net.places[i] for i in g), GroupKind.AT_MOST_ONE)
            for g in groups]


def detect_one_hot(group: MutexGroup, net: PetriNet) -> MutexGroup:
    """Upgrade to EXACTLY_ONE when initial truth and disable/enable balance hold."""
    if group.kind is not GroupKind.AT_MOST_ONE:
        return group
    problem = net.problem
    members = set(group.members)
    if not any(problem.init[name] is True for name in members):
        return group
    member_ids = {net.place_id(name) for name in members}
    disablers: dict[int, bool] = {}
    enablers: dict[int, bool] = {}
    for arc in net.arcs:
        if arc.place not in member_ids:
            continue
        sets_false = (arc.bool_value is False or arc.flip_to is False)
        sets_true = (arc.bool_value is True or arc.flip_to is True)
        if sets_false:
            disablers[arc.transition] = True
        if sets_true:
            enablers[arc.transition] = True
    if all(enablers.get(t, False) for t in disablers):
        return MutexGroup(group.members, GroupKind.EXACTLY_ONE)
    return group


def analyze_invariants(system: RelaxedSystem, workers: int = 1) -> list[MutexGroup]:
    pairs = find_mutex_pairs(system, workers=workers)
    groups = build_mutex_groups(pairs, system.net)
    return [detect_one_hot(g, system.net) for g in groups]


# ── Infeasibility explanations ────────────────────────────────────────────

def _subset_infeasible(system: RelaxedSystem, goal: tuple[Condition, ...],
                       subset) -> bool:
    return not _feasible_with(system, [condition_row(goal[i]) for i in subset])


def explain_infeasibility(system: RelaxedSystem, goal: tuple[Condition, ...],
                          threshold: int = ENUMERATION_THRESHOLD,
                          max_sets: int = MAX_CONFLICT_SETS) -> Explanation:
    """Minimal goal subsets that make the relaxed system infeasible.

    Small goals get the complete increasing-cardinality enumeration; larger
    ones go through the disable-minimization MIP, which yields minimum
    cardinality conflict sets until the blocked program runs dry.
    """
    if check_goal_reachable(system, goal) is not RelaxStatus.INFEASIBLE:
        raise ValueError("goal is relaxed-feasible; nothing to explain")
    if len(goal) <= threshold:
        found = _explain_by_enumeration(system, goal)
        truncated = False
    else:
        found, truncated = _explain_by_mip(system, goal, max_sets)
    ordered = sorted(tuple(sorted(s)) for s in found)
    return Explanation(tuple(ordered), truncated)


def _explain_by_enumeration(system: RelaxedSystem,
                            goal: tuple[Condition, ...]) -> list[frozenset[int]]:
    found: list[frozenset[int]] = []
    indices = range(len(goal))
    for size in range(1, len(goal) + 1):
        for combo in itertools.combinations(indices, size):
            as_set = set(combo)
            if any(f <= as_set for f in found):
                continue  # terminate the branch: supersets cannot be minimal
            if _subset_infeasible(system, goal, combo):
                found.append(frozenset(combo))
    return found


def _explain_by_mip(system: RelaxedSystem, goal: tuple[Condition, ...],
                    max_sets: int) -> tuple[list[frozenset[int]], bool]:
    from .solve import SolveOutcome, SolverState

    st = SolverState()
    for name, lo, hi in system.variables:
        st.declare(name, "real", lo, hi)
    for i in range(len(goal)):
        st.declare(f"y:{i}", "bool")
    for row in system.flow_rows:
        st.add_row(row.terms, row.op, row.rhs)
    for row in system.constraint_rows:
        st.add_row(row.terms, row.op, row.rhs)
    for i, cond in enumerate(goal):
        row = condition_row(cond)
        st.add_indicator(f"y:{i}", False, row.terms, row.op, row.rhs)

    objective = {f"y:{i}": Fraction(1) for i in range(len(goal))}
    found: list[frozenset[int]] = []
    truncated = False
    while True:
        res = st.minimize(objective)
        if res.outcome is not SolveOutcome.SAT or res.objective_value == 0:
            break
        disabled = sorted(i for i in range(len(goal))
                          if res.model[f"y:{i}"] is True)
        for i in disabled:
            conflict = _shrink_conflict(system, goal, i, disabled)
            if conflict not in found:
                found.append(conflict)
        st.add_row([(Fraction(1), f"y:{i}") for i in disabled], "<=",
                   Fraction(len(disabled) - 1))
        if len(found) >= max_sets:
            truncated = True
            break
    return found, truncated


def _shrink_conflict(system: RelaxedSystem, goal: tuple[Condition, ...],
                     keep: int, disabled: list[int]) -> frozenset[int]:
    """Deletion-shrink (goal \\ disabled) + {keep} to a minimal conflict set."""
    current = set(range(len(goal))) - set(disabled) | {keep}
    for j in sorted(current - {keep}):
        trial = current - {j}
        if _subset_infeasible(system, goal, trial):
            current = trial
    return frozenset(current)
