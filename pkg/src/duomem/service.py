"""HTTP service exposing sessions, memory inspection, traces, and eval runs.

State layout on disk (under the service state directory):

    sessions/<session_id>.json    memory snapshot, rewritten after every turn
    runs/<run_id>.json            eval run status + report

Snapshots are written with an atomic rename so a crash mid-write never
leaves a corrupt file. On restart, sessions are restored lazily from their
latest snapshot the first time they are touched.

Per-session requests are single-flight: a turn or query arriving while
another is being processed for the same session gets a 409.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from duomem.errors import DuomemError, TurnInFlight, UnknownSession
from duomem.evaluation import Evaluator, MetricsReport, RunSpec
from duomem.gateway.core import Gateway
from duomem.memory.snapshot import restore, snapshot
from duomem.pipeline import DialogueTurn, PipelineConfig, Query, Session


# ---------------------------------------------------------------------------
# request/response bodies


class CreateSessionBody(BaseModel):
    session_id: Optional[str] = None
    config: dict = {}


class TurnBody(BaseModel):
    user_text: str
    assistant_text: str = ""
    image_path: Optional[str] = None
    concept_id: Optional[str] = None


class QueryBody(BaseModel):
    text: str
    image_path: Optional[str] = None


class EvalRunBody(BaseModel):
    system: str = "engine"
    dataset_root: str
    split: str = "both"
    answer_format: str = "choice"
    config: dict = {}


# ---------------------------------------------------------------------------
# session registry


@dataclass
class SessionSlot:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    turn_counter: int = 0


class SessionStore:
    """In-memory sessions backed by on-disk snapshots."""

    def __init__(self, gateway: Gateway, state_dir: Path) -> None:
        self.gateway = gateway
        self.state_dir = state_dir
        self.sessions_dir = state_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._slots: dict[str, SessionSlot] = {}
        self._registry_lock = threading.Lock()

    def _snapshot_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.json"

    def _meta_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.meta.json"

    def create(self, session_id: Optional[str], config: dict) -> SessionSlot:
        session_id = session_id or uuid.uuid4().hex[:12]
        with self._registry_lock:
            if session_id in self._slots or self._snapshot_path(session_id).exists():
                raise HTTPException(status_code=409, detail="session already exists")
            session = Session(
                self.gateway, PipelineConfig(**config), session_id=session_id
            )
            slot = SessionSlot(session=session)
            self._slots[session_id] = slot
        self.persist(slot)
        return slot

    def get(self, session_id: str) -> SessionSlot:
        with self._registry_lock:
            slot = self._slots.get(session_id)
            if slot is not None:
                return slot
            path = self._snapshot_path(session_id)
            if not path.exists():
                raise UnknownSession(session_id)
            meta = {}
            meta_path = self._meta_path(session_id)
            if meta_path.exists():
                meta = json.loads(meta_path.read_text())
            session = Session(
                self.gateway,
                PipelineConfig(**meta.get("config", {})),
                session_id=session_id,
            )
            session.memory = restore(path.read_text())
            slot = SessionSlot(session=session, turn_counter=meta.get("turns", 0))
            self._slots[session_id] = slot
            return slot

    def persist(self, slot: SessionSlot) -> None:
        session = slot.session
        _atomic_write(self._snapshot_path(session.session_id), snapshot(session.memory))
        meta = {"config": session.config.to_dict(), "turns": slot.turn_counter}
        _atomic_write(
            self._meta_path(session.session_id),
            json.dumps(meta, indent=2, sort_keys=True) + "\n",
        )

    def list_ids(self) -> list[str]:
        on_disk = {
            p.stem for p in self.sessions_dir.glob("*.json") if not p.stem.endswith(".meta")
        }
        with self._registry_lock:
            return sorted(on_disk | set(self._slots))


def _atomic_write(path: Path, payload: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# eval run registry


@dataclass
class EvalRun:
    run_id: str
    status: str = "running"  # running | done | failed
    report: Optional[dict] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "report": self.report,
            "error": self.error,
        }


class RunStore:
    def __init__(self, evaluator: Evaluator, state_dir: Path) -> None:
        self.evaluator = evaluator
        self.runs_dir = state_dir / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._runs: dict[str, EvalRun] = {}
        self._lock = threading.Lock()

    def start(self, spec: RunSpec) -> EvalRun:
        run = EvalRun(run_id=uuid.uuid4().hex[:12])
        with self._lock:
            self._runs[run.run_id] = run

        def worker() -> None:
            try:
                report: MetricsReport = self.evaluator.run(spec)
                run.report = report.to_dict()
                run.status = "done"
            except Exception as exc:  # a failed run must not kill the service
                run.error = f"{type(exc).__name__}: {exc}"
                run.status = "failed"
            _atomic_write(
                self.runs_dir / f"{run.run_id}.json",
                json.dumps(run.to_dict(), indent=2, sort_keys=True) + "\n",
            )

        threading.Thread(target=worker, daemon=True).start()
        return run

    def get(self, run_id: str) -> EvalRun:
        with self._lock:
            run = self._runs.get(run_id)
        if run is not None:
            return run
        path = self.runs_dir / f"{run_id}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="unknown run")
        doc = json.loads(path.read_text())
        return EvalRun(
            run_id=doc["run_id"],
            status=doc["status"],
            report=doc.get("report"),
            error=doc.get("error"),
        )


# ---------------------------------------------------------------------------
# app factory


def create_app(gateway: Gateway, state_dir: str | Path = "duomem_state") -> FastAPI:
    state_path = Path(state_dir)
    store = SessionStore(gateway, state_path)
    runs = RunStore(Evaluator(gateway), state_path)
    app = FastAPI(title="duomem service")
    app.state.sessions = store
    app.state.runs = runs

    def fetch(session_id: str) -> SessionSlot:
        try:
            return store.get(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown session")

    def acquire(slot: SessionSlot):
        if not slot.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail=TurnInFlight.__name__)
        return slot.lock

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/sessions")
    def list_sessions() -> dict:
        return {"sessions": store.list_ids()}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        try:
            slot = store.create(body.session_id, body.config)
        except TypeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "session_id": slot.session.session_id,
            "config": slot.session.config.to_dict(),
        }

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnBody) -> dict:
        slot = fetch(session_id)
        lock = acquire(slot)
        try:
            slot.turn_counter += 1
            turn = DialogueTurn(
                user_text=body.user_text,
                assistant_text=body.assistant_text,
                image=body.image_path,
                turn_id=slot.turn_counter,
                concept_id=body.concept_id,
            )
            try:
                events = slot.session.ingest_turn(turn)
            except DuomemError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            store.persist(slot)
            return {"turn_id": slot.turn_counter, "events": events}
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/queries")
    def post_query(session_id: str, body: QueryBody) -> dict:
        slot = fetch(session_id)
        lock = acquire(slot)
        try:
            slot.turn_counter += 1
            query = Query(
                text=body.text, image=body.image_path, turn_id=slot.turn_counter
            )
            try:
                answer, trace = slot.session.run_query(query)
            except DuomemError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            store.persist(slot)
            return {"answer": answer, "trace_id": trace["trace_id"], "trace": trace}
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/memory")
    def get_memory(session_id: str) -> dict:
        slot = fetch(session_id)
        state = slot.session.memory
        def doc(item):  # mirrors the snapshot item layout
            out = {
                "concept_id": item.concept_id,
                "text": item.text,
                "kind": item.kind.value,
                "seq": item.seq,
                "item_no": item.item_no,
            }
            if item.image_ref is not None and isinstance(item.image_ref, str):
                out["image_ref"] = item.image_ref
            return out
        return {
            "session_id": session_id,
            "tau": state.ds.capacity_tau,
            "dynamic": [doc(i) for i in state.ds.items],
            "static": [doc(i) for i in state.sp.items],
        }

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str) -> dict:
        slot = fetch(session_id)
        return {"session_id": session_id, "events": slot.session.audit_log}

    @app.get("/sessions/{session_id}/traces/{trace_id}")
    def get_trace(session_id: str, trace_id: str) -> dict:
        slot = fetch(session_id)
        trace = slot.session.traces.get(trace_id)
        if trace is None:
            raise HTTPException(status_code=404, detail="unknown trace")
        return trace

    @app.post("/eval/runs", status_code=202)
    def start_run(body: EvalRunBody) -> dict:
        try:
            spec = RunSpec(
                system=body.system,
                dataset_root=body.dataset_root,
                split=body.split,
                answer_format=body.answer_format,
                config=PipelineConfig(**body.config),
            )
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        run = runs.start(spec)
        return {"run_id": run.run_id, "status": run.status}

    @app.get("/eval/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        return runs.get(run_id).to_dict()

    return app
