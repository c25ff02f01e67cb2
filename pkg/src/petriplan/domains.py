"""Parametric problem generators and a brute-force reachability oracle.

The generators build counter, delivery, robot-location, and random STRIPS
instances deterministically from their parameters.  The oracle does explicit
breadth-first search over hashed states under serial action application and
is the ground truth every other analysis is tested against.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .problem import (
    Action,
    BoolAssign,
    BoolLit,
    LinCond,
    NumDelta,
    Problem,
    StateVariable,
    VarKind,
    satisfies_condition,
)


class OracleStatus(Enum):
    REACHABLE = "reachable"
    UNREACHABLE = "unreachable"
    LIMIT_EXCEEDED = "limit-exceeded"


class PairStatus(Enum):
    BOTH_TRUE_REACHABLE = "both-true-reachable"
    NEVER = "never"
    LIMIT = "limit"


@dataclass(frozen=True)
class OracleResult:
    status: OracleStatus
    plan: tuple[str, ...] | None = None
    steps: int | None = None
    states_explored: int = 0


# ── Generators ────────────────────────────────────────────────────────────

def gen_counters(n: int, max_val: int, goal_vals: list[int]) -> Problem:
    """n bounded counters starting at 0 with unit inc/dec actions.

    Infeasible exactly when some goal value falls outside [0, max_val].
    """
    if n < 1 or max_val < 1:
        raise ValueError("need n >= 1 and max_val >= 1")
    if len(goal_vals) != n:
        raise ValueError(f"expected {n} goal values, got {len(goal_vals)}")
    variables = tuple(
        StateVariable(i, f"c{i}", VarKind.INTEGER, Fraction(0), Fraction(max_val))
        for i in range(n)
    )
    actions = []
    for i in range(n):
        name = f"c{i}"
        actions.append(Action(
            f"inc_{name}",
            pre=(LinCond(((Fraction(1), name),), "<=", Fraction(max_val - 1)),),
            eff=(NumDelta(name, Fraction(1)),),
        ))
        actions.append(Action(
            f"dec_{name}",
            pre=(LinCond(((Fraction(1), name),), ">=", Fraction(1)),),
            eff=(NumDelta(name, Fraction(-1)),),
        ))
    init = {f"c{i}": Fraction(0) for i in range(n)}
    goal = tuple(LinCond(((Fraction(1), f"c{i}"),), "=", Fraction(goal_vals[i]))
                 for i in range(n))
    return Problem(variables, tuple(actions), init, goal)


def gen_delivery(trucks: int, packages: int, locations: int, capacity: int = 1) -> Problem:
    """Trucks, packages, and locations with capacity-limited load counts.

    Truck t starts at location (t+1) mod L, package p at location p mod L;
    the goal puts package p at location (p+1) mod L.
    """
    if min(trucks, packages, locations, capacity) < 1:
        raise ValueError("all parameters must be >= 1")
    variables: list[StateVariable] = []
    init: dict[str, bool | Fraction] = {}

    def add_var(name: str, kind: VarKind, lower=None, upper=None) -> str:
        variables.append(StateVariable(len(variables), name, kind, lower, upper))
        return name

    for t in range(trucks):
        for l in range(locations):
            name = add_var(f"at_t{t}_l{l}", VarKind.BOOLEAN)
            init[name] = (l == (t + 1) % locations)
    for p in range(packages):
        for l in range(locations):
            name = add_var(f"pkg_p{p}_l{l}", VarKind.BOOLEAN)
            init[name] = (l == p % locations)
    for p in range(packages):
        for t in range(trucks):
            name = add_var(f"in_p{p}_t{t}", VarKind.BOOLEAN)
            init[name] = False
    for t in range(trucks):
        name = add_var(f"load_t{t}", VarKind.INTEGER, Fraction(0), Fraction(capacity))
        init[name] = Fraction(0)

    actions: list[Action] = []
    for t in range(trucks):
        for a in range(locations):
            for b in range(locations):
                if a == b:
                    continue
                actions.append(Action(
                    f"drive_t{t}_l{a}_l{b}",
                    pre=(BoolLit(f"at_t{t}_l{a}", True),),
                    eff=(BoolAssign(f"at_t{t}_l{a}", False),
                         BoolAssign(f"at_t{t}_l{b}", True)),
                ))
    for p in range(packages):
        for t in range(trucks):
            for l in range(locations):
                actions.append(Action(
                    f"load_p{p}_t{t}_l{l}",
                    pre=(BoolLit(f"pkg_p{p}_l{l}", True),
                         BoolLit(f"at_t{t}_l{l}", True),
                         LinCond(((Fraction(1), f"load_t{t}"),), "<=",
                                 Fraction(capacity - 1))),
                    eff=(BoolAssign(f"pkg_p{p}_l{l}", False),
                         BoolAssign(f"in_p{p}_t{t}", True),
                         NumDelta(f"load_t{t}", Fraction(1))),
                ))
                actions.append(Action(
                    f"unload_p{p}_t{t}_l{l}",
                    pre=(BoolLit(f"in_p{p}_t{t}", True),
                         BoolLit(f"at_t{t}_l{l}", True),
                         LinCond(((Fraction(1), f"load_t{t}"),), ">=", Fraction(1))),
                    eff=(BoolAssign(f"in_p{p}_t{t}", False),
                         BoolAssign(f"pkg_p{p}_l{l}", True),
                         NumDelta(f"load_t{t}", Fraction(-1))),
                ))
    goal = tuple(BoolLit(f"pkg_p{p}_l{(p + 1) % locations}", True)
                 for p in range(packages))
    return Problem(tuple(variables), tuple(actions), init, goal)


def gen_robot(locations: int) -> Problem:
    """Single robot moving among n locations; the location flags are one-hot."""
    if locations < 2:
        raise ValueError("need at least 2 locations")
    variables = tuple(StateVariable(i, f"at_{i}", VarKind.BOOLEAN)
                      for i in range(locations))
    init = {f"at_{i}": (i == 0) for i in range(locations)}
    actions = []
    for a in range(locations):
        for b in range(locations):
            if a == b:
                continue
            actions.append(Action(
                f"move_{a}_{b}",
                pre=(BoolLit(f"at_{a}", True),),
                eff=(BoolAssign(f"at_{a}", False), BoolAssign(f"at_{b}", True)),
            ))
    goal = (BoolLit(f"at_{locations - 1}", True),)
    return Problem(variables, tuple(actions), init, goal)


def gen_random_strips(seed: int, n_vars: int, n_actions: int) -> Problem:
    """Deterministic boolean-only instance for fuzzing; n_vars capped at 16."""
    if n_vars > 16:
        raise ValueError("n_vars must stay <= 16 so the oracle can exhaust states")
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(n_vars)]
    variables = tuple(StateVariable(i, names[i], VarKind.BOOLEAN)
                      for i in range(n_vars))
    init = {name: rng.random() < 0.5 for name in names}
    actions = []
    for i in range(n_actions):
        pre_vars = rng.sample(names, rng.randint(1, min(3, n_vars)))
        eff_vars = rng.sample(names, rng.randint(1, min(3, n_vars)))
        pre = tuple(BoolLit(v, rng.random() < 0.5) for v in pre_vars)
        eff = tuple(BoolAssign(v, rng.random() < 0.5) for v in eff_vars)
        actions.append(Action(f"a{i}", pre, eff))
    n_goal = rng.randint(1, min(3, n_vars))
    goal_vars = rng.sample(names, n_goal)
    goal = tuple(BoolLit(v, rng.random() < 0.5) for v in goal_vars)
    return Problem(variables, tuple(actions), init, goal)


# ── Serial-semantics transition function ──────────────────────────────────

def applicable(problem: Problem, state: dict[str, bool | Fraction],
               action: Action) -> bool:
    """Preconditions hold and effects keep every variable inside its bounds."""
    for cond in action.pre:
        if not satisfies_condition(problem, state, cond):
            return False
    for eff in action.eff:
        if isinstance(eff, NumDelta):
            var = problem.var(eff.var)
            new = state[eff.var] + eff.delta
            if var.lower is not None and new < var.lower:
                return False
            if var.upper is not None and new > var.upper:
                return False
    if problem.constraints:
        post = _apply(state, action)
        for cond in problem.constraints:
            if not satisfies_condition(problem, post, cond):
                return False
    return True


def _apply(state: dict[str, bool | Fraction], action: Action) -> dict:
    new = dict(state)
    for eff in action.eff:
        if isinstance(eff, BoolAssign):
            new[eff.var] = eff.value
        else:
            new[eff.var] = new[eff.var] + eff.delta
    return new


def apply_action(problem: Problem, state: dict[str, bool | Fraction],
                 action: Action) -> dict[str, bool | Fraction]:
    return _apply(state, action)


def satisfies_goal(problem: Problem, state: dict[str, bool | Fraction]) -> bool:
    return all(satisfies_condition(problem, state, c) for c in problem.goal)


def _state_key(problem: Problem, state: dict) -> tuple:
    return tuple(state[v.name] for v in problem.variables)


# ── Oracles ───────────────────────────────────────────────────────────────

def oracle_reachable(problem: Problem, max_states: int = 1_000_000) -> OracleResult:
    """BFS over explicit states; REACHABLE carries a shortest serial plan."""
    for v in problem.variables:
        if v.is_numeric and (v.lower is None or v.upper is None):
            raise ValueError(f"variable {v.name!r} lacks finite bounds; "
                             "the oracle needs a finite state space")
    init = dict(problem.init)
    if satisfies_goal(problem, init):
        return OracleResult(OracleStatus.REACHABLE, plan=(), steps=0, states_explored=1)
    seen = {_state_key(problem, init)}
    frontier: deque[tuple[dict, tuple[str, ...]]] = deque([(init, ())])
    while frontier:
        state, path = frontier.popleft()
        for action in problem.actions:
            if not applicable(problem, state, action):
                continue
            nxt = _apply(state, action)
            key = _state_key(problem, nxt)
            if key in seen:
                continue
            new_path = path + (action.name,)
            if satisfies_goal(problem, nxt):
                return OracleResult(OracleStatus.REACHABLE, plan=new_path,
                                    steps=len(new_path), states_explored=len(seen) + 1)
            seen.add(key)
            if len(seen) > max_states:
                return OracleResult(OracleStatus.LIMIT_EXCEEDED,
                                    states_explored=len(seen))
            frontier.append((nxt, new_path))
    return OracleResult(OracleStatus.UNREACHABLE, states_explored=len(seen))


def oracle_pair_reachable(problem: Problem, u: str, v: str,
                          max_states: int = 1_000_000) -> PairStatus:
    """Explore reachable states; report whether u and v are ever both true."""
    if problem.var(u).kind is not VarKind.BOOLEAN or problem.var(v).kind is not VarKind.BOOLEAN:
        raise ValueError("pair oracle takes boolean variables")
    init = dict(problem.init)
    if init[u] and init[v]:
        return PairStatus.BOTH_TRUE_REACHABLE
    seen = {_state_key(problem, init)}
    frontier = deque([init])
    while frontier:
        state = frontier.popleft()
        for action in problem.actions:
            if not applicable(problem, state, action):
                continue
            nxt = _apply(state, action)
            key = _state_key(problem, nxt)
            if key in seen:
                continue
            if nxt[u] and nxt[v]:
                return PairStatus.BOTH_TRUE_REACHABLE
            seen.add(key)
            if len(seen) > max_states:
                return PairStatus.LIMIT
            frontier.append(nxt)
    return PairStatus.NEVER
