"""Local HTTP API over live allocation sessions.

JSON over HTTP on loopback, one operator, no auth: create a session,
enroll subjects, record outcomes, read state.  Sessions persist as
line-delimited JSON event logs under the data directory and are replayed
on startup, so a restarted server serves identical views.  If a built
trial console is available its static files are mounted under /console.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .session import SessionStore

__all__ = ["create_app", "default_console_dir"]


class CreateSessionBody(BaseModel):
    design: dict
    arms: int = Field(default=2, ge=2, le=16)
    seed: int = Field(default=0, ge=0)
    name: str = ""


class OutcomeBody(BaseModel):
    success: bool


def default_console_dir() -> Optional[Path]:
    """Locate a built console (frontend/dist) next to a source checkout."""
    here = Path(__file__).resolve()
    for base in list(here.parents)[:4]:
        candidate = base / "frontend" / "dist"
        if (candidate / "index.html").is_file():
            return candidate
    return None


def create_app(data_dir, console_dir=None) -> FastAPI:
    store = SessionStore(data_dir)
    app = FastAPI(title="alloc-lab session API", version="0.1.0")
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            session = store.create(body.design, body.arms, body.seed, body.name)
        except (ValueError, TypeError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return session.view()

    @app.get("/sessions")
    def list_sessions():
        items = [
            {"id": s.id, "name": s.name, "design": s.spec.kind, "n": s.state.n}
            for s in store.sessions.values()
        ]
        items.sort(key=lambda item: item["id"])
        return {"sessions": items}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return store.get(session_id).view()
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/sessions/{session_id}/enroll")
    def enroll(session_id: str):
        try:
            return store.enroll(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/sessions/{session_id}/subjects/{subject}/outcome")
    def record_outcome(session_id: str, subject: int, body: OutcomeBody):
        try:
            store.record_outcome(session_id, subject, body.success)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        except IndexError:
            raise HTTPException(status_code=404, detail=f"unknown subject {subject}")
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return store.get(session_id).view()

    mount = console_dir if console_dir is not None else default_console_dir()
    if mount is not None and Path(mount).is_dir():
        app.mount("/console", StaticFiles(directory=str(mount), html=True), name="console")

    return app
