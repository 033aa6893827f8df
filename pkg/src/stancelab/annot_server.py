"""HTTP server for dual-annotator labeling sessions.

The server holds sessions in memory and appends every accepted label to the
event log, so its responses are a pure function of the log and a restart
loses nothing. It binds to loopback by default; the UI's static assets are
served from / when a directory is configured.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import annotation
from .annotation import AnnotationSession, ItemSetMismatch, IncompleteSession
from .classifier import Label

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>stancelab annotator</title></head>
<body><h1>stancelab annotation server</h1>
<p>No UI bundle is configured. Point static_dir at a built frontend, or use
the JSON API under /api directly.</p></body></html>
"""


class AnnotationStore:
    """Sessions plus the single writer for the label event log."""

    def __init__(self, log_path, sentence_texts: Mapping[str, str]):
        self.log_path = Path(log_path)
        self._texts = dict(sentence_texts)
        self._sessions: dict[str, AnnotationSession] = {}
        self._lock = threading.Lock()

    def add_session(self, session_id: str, annotator_id: str, items) -> None:
        items = tuple(items)
        missing = [sid for sid in items if sid not in self._texts]
        if missing:
            raise KeyError(f"no sentence text for {missing[:3]}")
        self._sessions[session_id] = annotation.new_session(session_id, annotator_id, items)

    def replay_log(self) -> None:
        events = annotation.load_label_events(self.log_path)
        self._sessions = annotation.fold_events(self._sessions, events)

    def session_ids(self) -> list[str]:
        return list(self._sessions)

    def _view(self, session: AnnotationSession) -> dict:
        next_item = None
        for sid in session.items:
            if sid not in session.labels:
                next_item = {"sentence_id": sid, "sentence_text": self._texts[sid]}
                break
        label_counts = {label.value: 0 for label in annotation.LABEL_ORDER}
        for label in session.labels.values():
            label_counts[label.value] += 1
        view = {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "total": len(session.items),
            "labeled": len(session.labels),
            "label_counts": label_counts,
        }
        if next_item is not None:
            view["next"] = next_item
        return view

    def view(self, session_id: str) -> dict | None:
        session = self._sessions.get(session_id)
        return None if session is None else self._view(session)

    def post_label(self, session_id: str, sentence_id: str, label: Label) -> dict | None:
        # Mutation and log append happen under one lock: concurrent posts
        # serialize and the log never interleaves partial records.
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                return None
            updated = annotation.record_label(session, sentence_id, label)
            annotation.append_label_event(self.log_path, updated, sentence_id, label)
            self._sessions[session_id] = updated
            return self._view(updated)

    def agreement(self, a: str, b: str) -> dict:
        result = annotation.cohen_kappa(self._sessions[a], self._sessions[b])
        return {
            "kappa": result.kappa,
            "p_o": result.p_o,
            "p_e": result.p_e,
            "n_items": result.n_items,
            "labels": [label.value for label in annotation.LABEL_ORDER],
            "cross_table": [list(row) for row in result.cross_table],
        }


class LabelRequest(BaseModel):
    sentence_id: str
    label: str


def create_app(store: AnnotationStore, static_dir=None) -> FastAPI:
    app = FastAPI(title="stancelab annotator")

    @app.get("/api/sessions/{session_id}/next")
    def get_next(session_id: str):
        view = store.view(session_id)
        if view is None:
            return JSONResponse(status_code=404, content={"detail": f"unknown session {session_id!r}"})
        return view

    @app.post("/api/sessions/{session_id}/labels")
    def post_label(session_id: str, body: LabelRequest):
        try:
            label = Label(body.label)
        except ValueError:
            return JSONResponse(status_code=422, content={"detail": f"unknown label {body.label!r}"})
        try:
            view = store.post_label(session_id, body.sentence_id, label)
        except annotation.UnknownSentence as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if view is None:
            return JSONResponse(status_code=404, content={"detail": f"unknown session {session_id!r}"})
        return view

    @app.get("/api/agreement")
    def get_agreement(a: str, b: str):
        for session_id in (a, b):
            if store.view(session_id) is None:
                return JSONResponse(
                    status_code=404, content={"detail": f"unknown session {session_id!r}"}
                )
        try:
            return store.agreement(a, b)
        except (IncompleteSession, ItemSetMismatch) as exc:
            return JSONResponse(status_code=409, content={"detail": str(exc)})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app


def serve(store: AnnotationStore, host: str, port: int, static_dir=None) -> None:
    """Run the annotation server until interrupted."""
    import uvicorn

    app = create_app(store, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
