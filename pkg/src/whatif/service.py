"""HTTP service over the workbench: sessions, queries, diffs, solves.

Sessions are in-memory; each holds the current model source (round k+1
builds on round k's updated source), an append-only outcome history, and an
event log that the server-sent-events endpoint streams so a client can
follow a query's workflow phases live.  At most one query runs per session
at a time; unrelated sessions are never blocked because query handlers run
in worker threads.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .graph import decision_information
from .parser import ParseError, parse_model
from .providers import ChatProvider
from .session import AgentConfig, SessionOutcome, SessionPhase, commander_run
from .solver import Solution, solve_milp

ProviderFactory = Callable[[], ChatProvider]

CONFIG_KEYS = ("shot_mode", "debug_limit", "example_qa", "temperature", "max_tokens")


class SessionCreateBody(BaseModel):
    model_source: str
    config: dict = Field(default_factory=dict)


class QueryBody(BaseModel):
    text: str


class DiffBody(BaseModel):
    model_a: str
    model_b: str


class SolveBody(BaseModel):
    model_source: str


@dataclass
class SessionRecord:
    session_id: str
    base_source: str
    model_source: str  # current source; advances after each successful round
    config: AgentConfig
    base_solution: Solution
    history: list[SessionOutcome] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def emit(self, phase: SessionPhase) -> None:
        self.events.append(
            {"seq": len(self.events), "round": len(self.history), "phase": phase.value}
        )

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "model_source": self.model_source,
            "base_source": self.base_source,
            "config": self.config.to_dict(),
            "base_solution": self.base_solution.to_dict(),
            "history": [outcome.to_dict() for outcome in self.history],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


def _bad_request(kind: str, detail: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"kind": kind, "detail": detail})


def _parse_or_400(source: str, which: str = "model_source"):
    try:
        return parse_model(source)
    except ParseError as exc:
        raise _bad_request("parse-error", f"{which}: {exc}") from exc


def create_app(provider_factory: ProviderFactory, config: AgentConfig | None = None) -> FastAPI:
    """Build the service.  ``provider_factory`` supplies a fresh provider per
    query run (scripted mocks get fresh response queues each time)."""
    app = FastAPI(title="whatif", version="0.1.0")
    sessions: dict[str, SessionRecord] = {}
    sessions_lock = threading.Lock()
    base_config = config or AgentConfig()

    def get_session(session_id: str) -> SessionRecord:
        with sessions_lock:
            record = sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return record

    @app.post("/sessions")
    def create_session(body: SessionCreateBody) -> dict:
        model = _parse_or_400(body.model_source)
        unknown = set(body.config) - set(CONFIG_KEYS)
        if unknown:
            raise _bad_request("config-error", f"unknown config keys: {sorted(unknown)}")
        try:
            cfg_values = {**base_config.to_dict(), **body.config}
            cfg_values.pop("provider_endpoint", None)
            cfg_values.pop("provider_model", None)
            cfg = AgentConfig(
                **{k: v for k, v in cfg_values.items() if k in AgentConfig.__dataclass_fields__}
            )
        except ValueError as exc:
            raise _bad_request("config-error", str(exc)) from exc
        base_solution = solve_milp(model)
        record = SessionRecord(
            session_id=uuid.uuid4().hex,
            base_source=body.model_source,
            model_source=body.model_source,
            config=cfg,
            base_solution=base_solution,
        )
        with sessions_lock:
            sessions[record.session_id] = record
        return {
            "session_id": record.session_id,
            "base_solution": base_solution.to_dict(),
        }

    @app.post("/sessions/{session_id}/query")
    def run_query(session_id: str, body: QueryBody) -> dict:
        record = get_session(session_id)
        if not record.lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail="a query is already in flight for this session"
            )
        try:
            model = _parse_or_400(record.model_source)
            outcome = commander_run(
                model,
                body.text,
                record.config,
                provider_factory(),
                on_phase=record.emit,
            )
            record.history.append(outcome)
            if outcome.status == "done" and outcome.updated_source is not None:
                record.model_source = outcome.updated_source
            record.updated_at = time.time()
        finally:
            record.lock.release()
        if outcome.status == "failed" and outcome.failure_stage == "provider":
            raise HTTPException(status_code=502, detail=outcome.failure_reason)
        return outcome.to_dict()

    @app.get("/sessions/{session_id}")
    def get_record(session_id: str) -> dict:
        return get_session(session_id).to_dict()

    @app.get("/sessions/{session_id}/events")
    async def stream_events(
        session_id: str, since: int = 0, follow: bool = False
    ) -> StreamingResponse:
        """Replay phase events from ``since`` onward; with ``follow`` the
        stream stays open, otherwise it closes once the session is idle.
        SSE clients reconnect with the last seen id to resume."""
        record = get_session(session_id)

        async def event_stream():
            yield "retry: 1000\n\n"
            seen = max(0, since)
            idle = 0.0
            while True:
                while seen < len(record.events):
                    event = record.events[seen]
                    seen += 1
                    idle = 0.0
                    yield (
                        f"event: phase\nid: {event['seq']}\n"
                        f"data: {json.dumps(event)}\n\n"
                    )
                if not follow and not record.lock.locked():
                    return
                await asyncio.sleep(0.05)
                idle += 0.05
                if idle >= 15.0:
                    idle = 0.0
                    yield ": keep-alive\n\n"

        return StreamingResponse(event_stream(), media_type="text/event-stream")

    @app.post("/diff")
    def diff(body: DiffBody) -> dict:
        model_a = _parse_or_400(body.model_a, "model_a")
        model_b = _parse_or_400(body.model_b, "model_b")
        return decision_information(model_a, model_b).to_dict()

    @app.post("/solve")
    def solve(body: SolveBody) -> dict:
        model = _parse_or_400(body.model_source)
        return solve_milp(model).to_dict()

    return app
