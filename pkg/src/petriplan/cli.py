"""Command-line entry point.

Subcommands: generate, analyze, check, plan, serve, bench.  Exit codes:
0 success / possibly-feasible / plan found; 1 infeasible; 2 usage or input
error; 3 resource limit.  `--format=report` switches stdout to the
machine-readable document forms.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .domains import gen_counters, gen_delivery, gen_random_strips, gen_robot
from .expr import pretty
from .planner import PlanOptions, PlanStatus, plan, preprocess
from .problem import (
    ProblemFormatError,
    ProblemValidationError,
    parse_problem,
    serialize_problem,
)
from .relax import RelaxStatus, explain_infeasibility
from .report import outcome_doc, timings_doc, write_bench_outputs

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _read_problem(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_problem(text)


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _condition_text(problem, index: int) -> str:
    from .encode import condition_expr
    cond = problem.goal[index]
    return pretty(condition_expr(cond, 0)).replace("@0", "")


# ── Subcommands ───────────────────────────────────────────────────────────

def cmd_generate(args) -> int:
    if args.family == "counters":
        goals = [int(g) for g in args.goals.split(",")] if args.goals else \
            [args.max] * args.n
        problem = gen_counters(args.n, args.max, goals)
    elif args.family == "delivery":
        problem = gen_delivery(args.trucks, args.packages, args.locations,
                               args.capacity)
    elif args.family == "random":
        problem = gen_random_strips(args.seed, args.vars, args.actions)
    else:
        problem = gen_robot(args.locations)
    _emit(serialize_problem(problem), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    problem = _read_problem(args.problem)
    analysis = preprocess(problem, workers=args.threads)
    if args.emit_net:
        from .petri import emit_net
        _emit(emit_net(analysis.net), args.out)
        return EXIT_OK
    if args.emit_reach:
        doc = {}
        for label, sets in (("forward", analysis.forward),
                            ("backward", analysis.backward)):
            doc[label] = {
                "fixpoint_step": sets.fixpoint_step,
                "steps": [
                    {"places": {k: (v if isinstance(v, bool) else str(v))
                                for k, v in sb.places.items()},
                     "disabled": sorted(sb.disabled)}
                    for sb in sets.per_step
                ],
            }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    doc = {
        "relaxation": analysis.relax_status.value,
        "horizon_lower": analysis.horizon_lower,
        "invariant_groups": [
            {"members": list(g.members), "kind": g.kind.value}
            for g in analysis.invariants
        ],
        "constants": {k: (v if isinstance(v, bool) else str(v))
                      for k, v in analysis.forward.per_step[
                          analysis.forward.fixpoint_step].places.items()},
    }
    if args.format == "report":
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"relaxation: {doc['relaxation']}",
                 f"horizon lower bound: {doc['horizon_lower']}",
                 f"invariant groups ({len(analysis.invariants)}):"]
        for g in analysis.invariants:
            lines.append(f"  {g.kind.value}: {', '.join(g.members)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    problem = _read_problem(args.problem)
    analysis = preprocess(problem, workers=args.threads)
    infeasible = analysis.relax_status is RelaxStatus.INFEASIBLE
    explanations = None
    if infeasible:
        explanations = explain_infeasibility(analysis.system, problem.goal)
    if args.format == "report":
        doc = {
            "status": analysis.relax_status.value,
            "explanations": ([list(s) for s in explanations.goal_index_sets]
                             if explanations else None),
            "invariant_groups": [
                {"members": list(g.members), "kind": g.kind.value}
                for g in analysis.invariants
            ],
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"status: {analysis.relax_status.value}"]
        if explanations:
            lines.append("conflicting goal sets:")
            for subset in explanations.goal_index_sets:
                rendered = "; ".join(_condition_text(problem, i) for i in subset)
                lines.append(f"  {{{', '.join(map(str, subset))}}}: {rendered}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_INFEASIBLE if infeasible else EXIT_OK


def cmd_plan(args) -> int:
    problem = _read_problem(args.problem)
    if args.emit:
        return _emit_encoding(problem, args)
    outcome = plan(problem, PlanOptions(max_horizon=args.max_horizon,
                                        workers=args.threads))
    if args.format == "report":
        doc = {"outcome": outcome_doc(outcome), "timings": timings_doc(outcome)}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"status: {outcome.status.value}"]
        if outcome.plan:
            lines.append(f"horizon: {outcome.plan.horizon}")
            for k, step in enumerate(outcome.plan.steps):
                lines.append(f"  step {k + 1}: {', '.join(step) if step else '(none)'}")
            lines.append("linearization: " + ", ".join(outcome.plan.linearization))
        if outcome.explanation:
            for subset in outcome.explanation.goal_index_sets:
                rendered = "; ".join(_condition_text(problem, i) for i in subset)
                lines.append(f"conflict {{{', '.join(map(str, subset))}}}: {rendered}")
        if outcome.detail:
            lines.append(f"detail: {outcome.detail}")
        _emit("\n".join(lines) + "\n", args.out)
    if outcome.status is PlanStatus.PLAN:
        return EXIT_OK
    if outcome.status is PlanStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_RESOURCE


def _emit_encoding(problem, args) -> int:
    from .planner import HorizonSolver
    analysis = preprocess(problem, workers=args.threads)
    solver = HorizonSolver(analysis)
    horizon = max(analysis.horizon_lower, 1)
    solver.ensure_horizon(min(horizon, args.max_horizon))
    _emit(solver.state.export(args.emit), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve
    serve(port=args.port, data_dir=args.data_dir, workers=args.threads)
    return EXIT_OK


def cmd_bench(args) -> int:
    out_dir = Path(args.out_dir)
    summary = write_bench_outputs(args.suite, out_dir, args.seed,
                                  sequences=args.sequences,
                                  length=args.updates)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    sys.stdout.write(f"tables and figures written to {out_dir}\n")
    return EXIT_OK


# ── Argument parsing ──────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="petriplan",
        description="Task planning via Petri-net relaxation and exact MILP")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a generated problem document")
    gen_sub = gen.add_subparsers(dest="family", required=True)
    c = gen_sub.add_parser("counters")
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--max", type=int, default=2)
    c.add_argument("--goals", type=str, default=None,
                   help="comma-separated goal values (default: all max)")
    d = gen_sub.add_parser("delivery")
    d.add_argument("--trucks", type=int, default=1)
    d.add_argument("--packages", type=int, default=1)
    d.add_argument("--locations", type=int, default=2)
    d.add_argument("--capacity", type=int, default=1)
    r = gen_sub.add_parser("random")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--vars", type=int, default=8)
    r.add_argument("--actions", type=int, default=8)
    rb = gen_sub.add_parser("robot")
    rb.add_argument("--locations", type=int, default=3)
    for p in (c, d, r, rb):
        p.add_argument("--out", "-o", default=None)

    def common(p, with_format=True):
        p.add_argument("problem", help="problem document path or - for stdin")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", "-o", default=None)
        if with_format:
            p.add_argument("--format", choices=["text", "report"],
                           default="text")

    an = sub.add_parser("analyze", help="invariants, bounds, reachable sets")
    common(an)
    an.add_argument("--emit-net", action="store_true")
    an.add_argument("--emit-reach", action="store_true")

    ck = sub.add_parser("check", help="relaxation feasibility and explanations")
    common(ck)

    pl = sub.add_parser("plan", help="find a plan or explain infeasibility")
    common(pl)
    pl.add_argument("--max-horizon", type=int, default=64)
    pl.add_argument("--emit", choices=["smt2", "lp"], default=None,
                    help="export the encoding instead of solving")

    sv = sub.add_parser("serve", help="run the session service")
    sv.add_argument("--port", type=int, default=None)
    sv.add_argument("--data-dir", default=None)
    sv.add_argument("--threads", type=int, default=1)

    bn = sub.add_parser("bench", help="one-shot and sequential benchmark tables")
    bn.add_argument("--suite", choices=["oneshot", "sequential"],
                    required=True)
    bn.add_argument("--seed", type=int, default=7)
    bn.add_argument("--sequences", type=int, default=10)
    bn.add_argument("--updates", type=int, default=30)
    bn.add_argument("--out-dir", default="bench-out")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handlers = {
        "generate": cmd_generate,
        "analyze": cmd_analyze,
        "check": cmd_check,
        "plan": cmd_plan,
        "serve": cmd_serve,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except (ProblemFormatError, ProblemValidationError, ValueError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
