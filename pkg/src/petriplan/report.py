"""Report documents, benchmark suites, tables, and figures.

Report documents are deterministic given the computation results: timings
always travel as a sibling field, never inside the outcome body, so wire
responses and in-process reports compare byte-for-byte.

The bench suites mirror the evaluation shape at desk scale: a one-shot
table over generated instances and sequential 30-update runs comparing the
incremental session against from-scratch replanning, with cumulative-time
figures rendered next to the delimited tables.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .domains import gen_counters, gen_delivery
from .planner import PlanOptions, PlanOutcome, PlanStatus, plan
from .problem import LinCond, Problem, condition_doc
from .session import AddConstraints, GoalChange, Update, create_session

F = Fraction


def outcome_doc(outcome: PlanOutcome) -> dict:
    """Deterministic body for one solve outcome (no timings)."""
    doc: dict = {"status": outcome.status.value}
    if outcome.plan is not None:
        doc["plan"] = {
            "steps": [list(s) for s in outcome.plan.steps],
            "linearization": list(outcome.plan.linearization),
            "horizon": outcome.plan.horizon,
        }
    if outcome.explanation is not None:
        doc["explanations"] = [list(s) for s in outcome.explanation.goal_index_sets]
        if outcome.explanation.truncated:
            doc["explanations_truncated"] = True
    if outcome.detail:
        doc["detail"] = outcome.detail
    doc["nodes"] = outcome.nodes
    doc["horizon_lower"] = outcome.horizon_lower
    return doc


def timings_doc(outcome: PlanOutcome) -> dict:
    return {stage: round(seconds, 6) for stage, seconds in outcome.timings.items()}


def session_view_doc(session) -> dict:
    last = session.last_outcome
    return {
        "id": session.id,
        "round": session.round,
        "goal": [condition_doc(c) for c in session.problem.goal],
        "constraints": [condition_doc(c) for c in session.problem.constraints],
        "relaxation": session.relax_status.value,
        "invariant_groups": [
            {"members": list(g.members), "kind": g.kind.value}
            for g in session.analysis.invariants
        ],
        "last_outcome": outcome_doc(last) if last else None,
        "explanations": ([list(s) for s in last.explanation.goal_index_sets]
                         if last and last.explanation else None),
    }


# ── Benchmark suites ──────────────────────────────────────────────────────

@dataclass
class BenchRow:
    suite: str
    instance: str
    round: int
    status: str
    horizon: int | None
    nodes: int
    seconds: float
    cumulative_incremental: float | None = None
    cumulative_scratch: float | None = None
    nodes_scratch: int | None = None


def oneshot_instances(seed: int) -> list[tuple[str, Problem]]:
    rng = random.Random(seed)
    out: list[tuple[str, Problem]] = []
    for n, mx in ((1, 2), (2, 3), (3, 3)):
        goals = [rng.randint(0, mx) for _ in range(n)]
        out.append((f"counters-{n}x{mx}", gen_counters(n, mx, goals)))
    out.append(("delivery-1-1-2", gen_delivery(1, 1, 2, 1)))
    out.append(("delivery-1-2-2", gen_delivery(1, 2, 2, 1)))
    return out


def run_oneshot(seed: int, max_horizon: int = 12) -> list[BenchRow]:
    rows = []
    for name, problem in oneshot_instances(seed):
        t0 = time.perf_counter()
        outcome = plan(problem, PlanOptions(max_horizon=max_horizon))
        elapsed = time.perf_counter() - t0
        rows.append(BenchRow(
            suite="oneshot", instance=name, round=0,
            status=outcome.status.value,
            horizon=outcome.plan.horizon if outcome.plan else None,
            nodes=outcome.nodes, seconds=elapsed))
    return rows


def sequence_updates(problem: Problem, seed: int, length: int = 30) -> list[Update]:
    """Deterministic alternating goal changes and constraint additions."""
    rng = random.Random(seed)
    numeric = [v for v in problem.variables if v.is_numeric and v.upper is not None]
    updates: list[Update] = []
    goal_len = len(problem.goal)
    for i in range(length):
        if i % 2 == 0 and goal_len > 0:
            idx = rng.randrange(goal_len)
            var = rng.choice(numeric)
            top = int(var.upper)
            value = rng.randint(0, top + 1)  # occasionally out of range
            updates.append(GoalChange(
                add=(LinCond(((F(1), var.name),), "=", F(value)),),
                delete=(idx,)))
        else:
            var = rng.choice(numeric)
            top = int(var.upper)
            bound = rng.randint(max(0, top - 1), top)
            updates.append(AddConstraints(
                (LinCond(((F(1), var.name),), "<=", F(bound)),)))
    return updates


def sequential_problems(seed: int, sequences: int = 10,
                        ) -> list[tuple[str, Problem]]:
    rng = random.Random(seed * 77 + 1)
    out = []
    for i in range(sequences):
        if i % 2 == 0:
            n = rng.choice([1, 2])
            mx = rng.choice([2, 3])
            goals = [rng.randint(0, mx) for _ in range(n)]
            out.append((f"counters-seq{i}", gen_counters(n, mx, goals)))
        else:
            out.append((f"delivery-seq{i}", gen_delivery(1, 1, 2, 1)))
    return out


@dataclass
class SequentialResult:
    rows: list[BenchRow] = field(default_factory=list)
    incremental_nodes: int = 0
    scratch_nodes: int = 0
    outcomes_match: bool = True


def run_sequence(name: str, problem: Problem, seed: int, length: int = 30,
                 max_horizon: int = 8) -> SequentialResult:
    """One 30-update sequence: session vs from-scratch replanning."""
    result = SequentialResult()
    session = create_session(problem, max_horizon=max_horizon)
    updates = sequence_updates(problem, seed, length)
    cum_inc = cum_scr = 0.0
    for round_idx in range(length + 1):
        t0 = time.perf_counter()
        outcome = session.solve_round()
        cum_inc += time.perf_counter() - t0
        t0 = time.perf_counter()
        scratch = plan(session.problem, PlanOptions(max_horizon=max_horizon))
        cum_scr += time.perf_counter() - t0
        result.incremental_nodes += outcome.nodes
        result.scratch_nodes += scratch.nodes
        same = outcome.status is scratch.status
        if same and outcome.status is PlanStatus.INFEASIBLE:
            same = (outcome.explanation.goal_index_sets
                    == scratch.explanation.goal_index_sets)
        result.outcomes_match = result.outcomes_match and same
        result.rows.append(BenchRow(
            suite="sequential", instance=name, round=round_idx,
            status=outcome.status.value,
            horizon=outcome.plan.horizon if outcome.plan else None,
            nodes=outcome.nodes, seconds=cum_inc,
            cumulative_incremental=cum_inc, cumulative_scratch=cum_scr,
            nodes_scratch=scratch.nodes))
        if round_idx < length:
            from .session import UpdateError
            try:
                session.apply_update(updates[round_idx])
            except UpdateError:
                pass  # rejected update leaves the round's problem unchanged
    return result


def run_sequential(seed: int, sequences: int = 10, length: int = 30,
                   max_horizon: int = 8) -> list[SequentialResult]:
    out = []
    for i, (name, problem) in enumerate(sequential_problems(seed, sequences)):
        out.append(run_sequence(name, problem, seed * 131 + i, length,
                                max_horizon))
    return out


# ── Table and figure output ───────────────────────────────────────────────

TABLE_COLUMNS = ["suite", "instance", "round", "status", "horizon", "nodes",
                 "seconds", "cumulative_incremental", "cumulative_scratch",
                 "nodes_scratch"]


def rows_to_tsv(rows: list[BenchRow]) -> str:
    lines = ["\t".join(TABLE_COLUMNS)]
    for row in rows:
        values = []
        for col in TABLE_COLUMNS:
            value = getattr(row, col)
            if isinstance(value, float):
                value = f"{value:.6f}"
            values.append("" if value is None else str(value))
        lines.append("\t".join(values))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[BenchRow]) -> str:
    docs = []
    for row in rows:
        doc = {col: getattr(row, col) for col in TABLE_COLUMNS}
        docs.append(doc)
    return json.dumps(docs, indent=2) + "\n"


def render_sequential_figure(results: list[SequentialResult], path: Path) -> None:
    """Average cumulative solve time per round, incremental vs scratch."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rounds = max(len(r.rows) for r in results)
    inc = [0.0] * rounds
    scr = [0.0] * rounds
    counts = [0] * rounds
    for result in results:
        for i, row in enumerate(result.rows):
            inc[i] += row.cumulative_incremental or 0.0
            scr[i] += row.cumulative_scratch or 0.0
            counts[i] += 1
    xs = list(range(rounds))
    inc_avg = [inc[i] / counts[i] for i in xs]
    scr_avg = [scr[i] / counts[i] for i in xs]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, inc_avg, label="incremental session", marker="o", markersize=3)
    ax.plot(xs, scr_avg, label="from-scratch replan", marker="s", markersize=3)
    ax.set_xlabel("update round")
    ax.set_ylabel("average cumulative time (s)")
    ax.set_title("Sequential planning: cumulative solve time")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_oneshot_figure(rows: list[BenchRow], path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [row.instance for row in rows]
    seconds = [row.seconds for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.barh(names, seconds)
    ax.set_xlabel("solve time (s)")
    ax.set_title("One-shot planning times")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_bench_outputs(suite: str, out_dir: Path, seed: int,
                        sequences: int = 10, length: int = 30) -> dict:
    """Run a suite and write table.tsv, table.json, and figure.png."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict = {"suite": suite, "seed": seed}
    if suite == "oneshot":
        rows = run_oneshot(seed)
        render_oneshot_figure(rows, out_dir / "oneshot.png")
        summary["instances"] = len(rows)
    elif suite == "sequential":
        results = run_sequential(seed, sequences=sequences, length=length)
        rows = [row for result in results for row in result.rows]
        render_sequential_figure(results, out_dir / "sequential.png")
        summary["sequences"] = len(results)
        summary["outcomes_match"] = all(r.outcomes_match for r in results)
        summary["incremental_nodes"] = sum(r.incremental_nodes for r in results)
        summary["scratch_nodes"] = sum(r.scratch_nodes for r in results)
    else:
        raise ValueError(f"unknown suite {suite!r}")
    (out_dir / "table.tsv").write_text(rows_to_tsv(rows))
    (out_dir / "table.json").write_text(rows_to_json(rows))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
