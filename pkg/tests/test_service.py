"""Wire API: session lifecycle over HTTP against a live threaded server."""

import json
import threading
import urllib.request
from urllib.error import HTTPError

import pytest

from petriplan.domains import gen_counters
from petriplan.problem import serialize_problem
from petriplan.report import outcome_doc, session_view_doc
from petriplan.service import make_server
from petriplan.session import create_session


@pytest.fixture()
def server(tmp_path):
    srv = make_server(port=0, data_dir=str(tmp_path))
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()


def request(srv, method, path, body=None):
    port = srv.server_address[1]
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}", data=data,
                                 method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        raw = resp.read().decode()
        if resp.headers.get("Content-Type", "").startswith("application/json"):
            return resp.status, json.loads(raw)
        return resp.status, raw


def test_create_update_solve_round_trip(server):
    problem_doc = json.loads(serialize_problem(gen_counters(1, 2, [3])))
    status, created = request(server, "POST", "/sessions",
                              {"problem": problem_doc})
    assert status == 201
    sid = created["id"]
    assert created["round"] == 0
    assert created["analysis"]["relaxation"] == "infeasible"

    status, solved = request(server, "POST", f"/sessions/{sid}/solve", {})
    assert status == 200
    assert solved["outcome"]["status"] == "infeasible"
    assert solved["outcome"]["explanations"] == [[0]]

    update = {"goal_change": {
        "add": [{"rel": {"terms": [[1, "c0"]], "op": "=", "rhs": 2}}],
        "del": [0]}}
    status, updated = request(server, "POST", f"/sessions/{sid}/updates",
                              {"update": update})
    assert status == 200
    assert updated["round"] == 1
    assert updated["relaxation"] == "possibly-feasible"

    status, solved = request(server, "POST", f"/sessions/{sid}/solve", {})
    assert solved["outcome"]["status"] == "plan"
    assert solved["outcome"]["plan"]["horizon"] == 2

    status, view = request(server, "GET", f"/sessions/{sid}")
    assert view["round"] == 1
    assert view["last_outcome"]["status"] == "plan"

    status, journal = request(server, "GET", f"/sessions/{sid}/journal")
    lines = [json.loads(l) for l in journal.strip().splitlines()]
    assert lines[0]["event"] == "create"
    assert [l["event"] for l in lines].count("solve") == 2


def test_wire_results_match_in_process_byte_for_byte(server):
    problem = gen_counters(1, 2, [2])
    problem_doc = json.loads(serialize_problem(problem))
    _, created = request(server, "POST", "/sessions", {"problem": problem_doc})
    sid = created["id"]
    _, solved = request(server, "POST", f"/sessions/{sid}/solve", {})

    local = create_session(problem)
    local_outcome = local.solve_round()
    wire_body = json.dumps(solved["outcome"], indent=2)
    local_body = json.dumps(outcome_doc(local_outcome), indent=2)
    assert wire_body == local_body

    _, view = request(server, "GET", f"/sessions/{sid}")
    local_view = session_view_doc(local)
    local_view["id"] = view["id"]  # ids are assigned by the store
    assert json.dumps(view, indent=2) == json.dumps(local_view, indent=2)


def test_sessions_are_isolated(server):
    doc_a = json.loads(serialize_problem(gen_counters(1, 2, [2])))
    doc_b = json.loads(serialize_problem(gen_counters(1, 3, [3])))
    _, a = request(server, "POST", "/sessions", {"problem": doc_a})
    _, b = request(server, "POST", "/sessions", {"problem": doc_b})
    assert a["id"] != b["id"]
    _, solved_a = request(server, "POST", f"/sessions/{a['id']}/solve", {})
    _, solved_b = request(server, "POST", f"/sessions/{b['id']}/solve", {})
    assert solved_a["outcome"]["plan"]["horizon"] == 2
    assert solved_b["outcome"]["plan"]["horizon"] == 3
    _, view_a = request(server, "GET", f"/sessions/{a['id']}")
    assert view_a["round"] == 0


def test_malformed_update_leaves_round_unchanged(server):
    doc = json.loads(serialize_problem(gen_counters(1, 2, [2])))
    _, created = request(server, "POST", "/sessions", {"problem": doc})
    sid = created["id"]
    with pytest.raises(HTTPError) as err:
        request(server, "POST", f"/sessions/{sid}/updates",
                {"update": {"goal_change": {"del": [9]}}})
    assert err.value.code == 400
    body = json.loads(err.value.read().decode())
    assert "error" in body
    _, view = request(server, "GET", f"/sessions/{sid}")
    assert view["round"] == 0


def test_unknown_session_is_404(server):
    with pytest.raises(HTTPError) as err:
        request(server, "GET", "/sessions/nope")
    assert err.value.code == 404


def test_invalid_problem_is_400(server):
    with pytest.raises(HTTPError) as err:
        request(server, "POST", "/sessions", {"problem": {"vars": []}})
    assert err.value.code == 400


def test_journal_persisted_to_data_dir(server, tmp_path):
    doc = json.loads(serialize_problem(gen_counters(1, 2, [2])))
    _, created = request(server, "POST", "/sessions", {"problem": doc})
    request(server, "POST", f"/sessions/{created['id']}/solve", {})
    path = tmp_path / f"{created['id']}.jsonl"
    assert path.exists()
    lines = path.read_text().strip().splitlines()
    assert json.loads(lines[0])["event"] == "create"
