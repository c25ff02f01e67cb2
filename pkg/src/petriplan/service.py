"""Session service: the wire API consumed by the CLI and the web console.

Endpoints (bodies share the canonical problem notation):

* POST /sessions {"problem": <document object or string>}
  -> 201 {"id", "round", "analysis": {...}}
* GET /sessions/{id} -> {"round", "goal", "invariant_groups",
  "last_outcome", "explanations"}
* POST /sessions/{id}/updates {"update": <update object>}
  -> {"round", "relaxation"}
* POST /sessions/{id}/solve {"max_horizon"?} -> {"outcome": {...}}
* GET /sessions/{id}/journal -> line-delimited records (text/plain)

Mutations on one session are serialized by a per-session lock; distinct
sessions are fully independent.  Journals append to PETRIPLAN_DATA_DIR as
events happen, so sessions survive restarts via replay.
"""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .problem import (
    ProblemFormatError,
    ProblemValidationError,
    parse_problem,
)
from .report import outcome_doc, session_view_doc
from .session import Session, UpdateError, parse_update_doc

DEFAULT_PORT = 8714


class SessionStore:
    def __init__(self, data_dir: str | None = None, workers: int = 1):
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.counter = 0
        self.global_lock = threading.Lock()
        self.workers = workers
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)

    def create(self, problem) -> Session:
        with self.global_lock:
            self.counter += 1
            session_id = f"s{self.counter}"
        session = Session(session_id, problem, workers=self.workers)
        with self.global_lock:
            self.sessions[session_id] = session
            self.locks[session_id] = threading.Lock()
        self._flush(session)
        return session

    def get(self, session_id: str) -> Session | None:
        return self.sessions.get(session_id)

    def lock(self, session_id: str) -> threading.Lock:
        return self.locks[session_id]

    def _flush(self, session: Session) -> None:
        if not self.data_dir:
            return
        path = self.data_dir / f"{session.id}.jsonl"
        path.write_text(session.journal_text())

    def flush(self, session: Session) -> None:
        self._flush(session)


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2) + "\n").encode()


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore  # injected by make_server

    def log_message(self, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, content_type="application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str):
        self._send(code, _json_bytes({"error": message}))

    def _read_json(self):
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw.decode() or "{}")
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed JSON body: {exc.msg}") from exc

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if len(parts) == 2 and parts[0] == "sessions":
            session = self.store.get(parts[1])
            if session is None:
                return self._error(404, f"unknown session {parts[1]!r}")
            return self._send(200, _json_bytes(session_view_doc(session)))
        if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "journal":
            session = self.store.get(parts[1])
            if session is None:
                return self._error(404, f"unknown session {parts[1]!r}")
            return self._send(200, session.journal_text().encode(),
                              content_type="text/plain")
        return self._error(404, f"no such resource {self.path!r}")

    def do_POST(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            body = self._read_json()
        except ValueError as exc:
            return self._error(400, str(exc))
        if parts == ["sessions"]:
            return self._create(body)
        if len(parts) == 3 and parts[0] == "sessions":
            session = self.store.get(parts[1])
            if session is None:
                return self._error(404, f"unknown session {parts[1]!r}")
            if parts[2] == "updates":
                return self._update(session, body)
            if parts[2] == "solve":
                return self._solve(session, body)
        return self._error(404, f"no such resource {self.path!r}")

    def _create(self, body):
        raw = body.get("problem")
        if raw is None:
            return self._error(400, "body needs a 'problem' key")
        text = raw if isinstance(raw, str) else json.dumps(raw)
        try:
            problem = parse_problem(text)
        except (ProblemFormatError, ProblemValidationError) as exc:
            return self._error(400, str(exc))
        session = self.store.create(problem)
        doc = {
            "id": session.id,
            "round": session.round,
            "analysis": {
                "relaxation": session.relax_status.value,
                "horizon_lower": session.analysis.horizon_lower,
                "invariant_groups": [
                    {"members": list(g.members), "kind": g.kind.value}
                    for g in session.analysis.invariants
                ],
            },
        }
        return self._send(201, _json_bytes(doc))

    def _update(self, session: Session, body):
        raw = body.get("update")
        if raw is None:
            return self._error(400, "body needs an 'update' key")
        with self.store.lock(session.id):
            try:
                update = parse_update_doc(raw)
                session.apply_update(update)
            except UpdateError as exc:
                return self._error(400, str(exc))
            self.store.flush(session)
            doc = {"round": session.round,
                   "relaxation": session.relax_status.value}
        return self._send(200, _json_bytes(doc))

    def _solve(self, session: Session, body):
        cap = body.get("max_horizon")
        if cap is not None and not isinstance(cap, int):
            return self._error(400, "max_horizon must be an integer")
        with self.store.lock(session.id):
            outcome = session.solve_round(max_horizon=cap)
            self.store.flush(session)
            doc = {"round": session.round, "outcome": outcome_doc(outcome)}
        return self._send(200, _json_bytes(doc))


def make_server(port: int | None = None, data_dir: str | None = None,
                workers: int = 1) -> ThreadingHTTPServer:
    port = port if port is not None else int(
        os.environ.get("PETRIPLAN_PORT", DEFAULT_PORT))
    data_dir = data_dir if data_dir is not None else \
        os.environ.get("PETRIPLAN_DATA_DIR")
    store = SessionStore(data_dir=data_dir, workers=workers)
    handler = type("Handler", (_Handler,), {"store": store})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.store = store  # type: ignore[attr-defined]
    return server


def serve(port: int | None = None, data_dir: str | None = None,
          workers: int = 1) -> None:
    server = make_server(port, data_dir, workers)
    host, bound_port = server.server_address
    print(f"petriplan session service on http://{host}:{bound_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
