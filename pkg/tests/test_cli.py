"""CLI subcommands, exit codes, and output formats."""

import json

import pytest

from petriplan.cli import run
from petriplan.domains import gen_counters
from petriplan.problem import parse_problem, serialize_problem


@pytest.fixture()
def counters_file(tmp_path):
    path = tmp_path / "counters.json"
    path.write_text(serialize_problem(gen_counters(1, 2, [2])))
    return path


@pytest.fixture()
def infeasible_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(serialize_problem(gen_counters(1, 2, [3])))
    return path


def test_generate_counters_round_trips(tmp_path, capsys):
    out = tmp_path / "p.json"
    code = run(["generate", "counters", "--n", "2", "--max", "3",
                "--goals", "1,2", "-o", str(out)])
    assert code == 0
    problem = parse_problem(out.read_text())
    assert len(problem.variables) == 2


def test_generate_to_stdout(capsys):
    code = run(["generate", "robot", "--locations", "3"])
    assert code == 0
    problem = parse_problem(capsys.readouterr().out)
    assert len(problem.actions) == 6


def test_check_feasible_exit_zero(counters_file, capsys):
    code = run(["check", str(counters_file)])
    assert code == 0
    assert "possibly-feasible" in capsys.readouterr().out


def test_check_infeasible_exit_one_with_explanation(infeasible_file, capsys):
    code = run(["check", str(infeasible_file)])
    assert code == 1
    out = capsys.readouterr().out
    assert "conflicting goal sets" in out
    assert "c0 = 3" in out


def test_check_report_format(infeasible_file, capsys):
    code = run(["check", str(infeasible_file), "--format", "report"])
    assert code == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "infeasible"
    assert doc["explanations"] == [[0]]


def test_plan_exit_codes(counters_file, infeasible_file, capsys):
    assert run(["plan", str(counters_file)]) == 0
    out = capsys.readouterr().out
    assert "inc_c0" in out
    assert run(["plan", str(infeasible_file)]) == 1
    capsys.readouterr()
    assert run(["plan", str(counters_file), "--max-horizon", "1"]) == 3


def test_plan_report_format(counters_file, capsys):
    code = run(["plan", str(counters_file), "--format", "report"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["outcome"]["status"] == "plan"
    assert doc["outcome"]["plan"]["horizon"] == 2
    assert "timings" in doc


def test_plan_emit_smt2_and_lp(counters_file, capsys):
    assert run(["plan", str(counters_file), "--emit", "smt2"]) == 0
    smt = capsys.readouterr().out
    assert smt.startswith("(set-logic")
    assert run(["plan", str(counters_file), "--emit", "lp"]) == 0
    lp = capsys.readouterr().out
    assert "Subject To" in lp


def test_analyze_outputs(counters_file, capsys):
    assert run(["analyze", str(counters_file)]) == 0
    assert "horizon lower bound" in capsys.readouterr().out
    assert run(["analyze", str(counters_file), "--emit-net"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["places"][0]["name"] == "c0"
    assert run(["analyze", str(counters_file), "--emit-reach"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "forward" in doc and "backward" in doc


def test_usage_error_exit_two(capsys):
    assert run(["plan", "/nonexistent/file.json"]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_flag_rejected():
    assert run(["plan", "--bogus"]) == 2


def test_bench_deterministic_tables(tmp_path, capsys):
    out1 = tmp_path / "b1"
    out2 = tmp_path / "b2"
    assert run(["bench", "--suite", "sequential", "--seed", "7",
                "--sequences", "2", "--updates", "4",
                "--out-dir", str(out1)]) == 0
    capsys.readouterr()
    assert run(["bench", "--suite", "sequential", "--seed", "7",
                "--sequences", "2", "--updates", "4",
                "--out-dir", str(out2)]) == 0
    capsys.readouterr()
    # Status/step columns are deterministic; timings differ run to run.
    def stable(path):
        rows = json.loads((path / "table.json").read_text())
        return [(r["instance"], r["round"], r["status"], r["horizon"],
                 r["nodes"], r["nodes_scratch"]) for r in rows]
    assert stable(out1) == stable(out2)
    assert (out1 / "sequential.png").exists()
    assert (out1 / "table.tsv").read_text().startswith("suite\t")


def test_bench_oneshot_writes_figure(tmp_path, capsys):
    out = tmp_path / "oneshot"
    assert run(["bench", "--suite", "oneshot", "--seed", "3",
                "--out-dir", str(out)]) == 0
    assert (out / "oneshot.png").exists()
    rows = json.loads((out / "table.json").read_text())
    assert all(r["status"] in ("plan", "infeasible", "resource-limit")
               for r in rows)
