"""HTTP facade over the engine and calibration sessions.

Endpoints (JSON over HTTP/1.1, no auth):

    POST /v1/query                     {"ssql": str} -> query outcome
    GET  /v1/sessions/{id}/next        next probe or {"done": true}
    POST /v1/sessions/{id}/answer      {"relevant": bool} -> next probe/done
    GET  /v1/sessions/{id}/results     {"image_ids": [...], "scores": [...]}
    GET  /v1/images/{id}               image bytes (JPEG/PNG sniffed)

/next and /results are pure reads; every mutation goes through /answer,
which holds the per-session lock non-blockingly: a concurrent answer to
the same session gets 409 instead of waiting.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .calibration import CalibrationSession
from .engine import Engine, OutcomeKind
from .errors import (
    AllMissingError,
    EmptyCandidateSetError,
    EmptyCandidatesError,
    NonIntegerIdError,
    QueryTypeError,
    SessionDoneError,
    SessionNotDoneError,
    SessionNotFoundError,
    SidecarExitError,
    SidecarProtocolError,
    SidecarTimeoutError,
    SsqlError,
    SsqlSyntaxError,
    UnknownColumnError,
    UnknownTableError,
)

_ERROR_MAP: list[tuple[type, int, str]] = [
    (SsqlSyntaxError, 400, "syntax_error"),
    (UnknownTableError, 400, "unknown_table"),
    (UnknownColumnError, 400, "unknown_table"),
    (QueryTypeError, 400, "syntax_error"),
    (NonIntegerIdError, 400, "syntax_error"),
    (EmptyCandidateSetError, 400, "empty_candidates"),
    (EmptyCandidatesError, 400, "empty_candidates"),
    (AllMissingError, 400, "empty_candidates"),
    (SessionNotFoundError, 404, "session_not_found"),
    (SessionDoneError, 409, "session_done"),
    (SessionNotDoneError, 409, "session_done"),
    (SidecarTimeoutError, 500, "sidecar_error"),
    (SidecarExitError, 500, "sidecar_error"),
    (SidecarProtocolError, 500, "sidecar_error"),
]


def _error_response(exc: Exception) -> JSONResponse:
    for etype, status, code in _ERROR_MAP:
        if isinstance(exc, etype):
            return JSONResponse(
                status_code=status, content={"code": code, "message": str(exc)}
            )
    return JSONResponse(
        status_code=500, content={"code": "internal", "message": str(exc)}
    )


def _probe_payload(session: CalibrationSession) -> dict:
    if session.done:
        return {"done": True}
    return {
        "image_id": session.pending_probe,
        "image_url": f"/v1/images/{session.pending_probe}",
        "questions_asked": len(session.questions),
        "remaining": len(session.remaining),
        "accepted_so_far": len(session.accepted),
    }


def _resolve_image_path(stored: str, images_root: str | Path | None) -> Path | None:
    """Ingestion stores image_root/file_name verbatim, which may be relative
    to the ingest-time working directory. Try it as written, then re-root
    relative paths under --images-root, then fall back to the bare file name
    (covers a relocated flat image directory)."""
    path = Path(stored)
    if path.is_file():
        return path
    if images_root is not None:
        root = Path(images_root)
        if not path.is_absolute() and (root / path).is_file():
            return root / path
        if (root / path.name).is_file():
            return root / path.name
    return None


def _sniff_media_type(data: bytes) -> str:
    if data.startswith(b"\xff\xd8\xff"):
        return "image/jpeg"
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png"
    return "application/octet-stream"


def create_app(engine: Engine, cors_origin: str | None = None, images_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="ssql", docs_url=None, redoc_url=None)

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(SsqlError)
    async def _ssql_error_handler(_request: Request, exc: SsqlError):
        return _error_response(exc)

    from fastapi.exceptions import RequestValidationError

    @app.exception_handler(RequestValidationError)
    async def _body_error_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "syntax_error", "message": "malformed request body"},
        )

    @app.post("/v1/query")
    def query(payload: dict) -> JSONResponse:
        ssql = payload.get("ssql") if isinstance(payload, dict) else None
        if not isinstance(ssql, str) or not ssql.strip():
            return JSONResponse(
                status_code=400,
                content={"code": "syntax_error", "message": "body must carry a non-empty 'ssql' string"},
            )
        outcome = engine.run(ssql)
        if outcome.kind is OutcomeKind.RELATION:
            return JSONResponse(
                {
                    "kind": "relation",
                    "columns": outcome.relation.column_names,
                    "rows": [list(row) for row in outcome.relation.rows],
                }
            )
        if outcome.kind is OutcomeKind.TOPK:
            return JSONResponse(
                {
                    "kind": "topk",
                    "items": [
                        {"image_id": c.image_id, "score": c.score} for c in outcome.topk
                    ],
                    "missing_ids": outcome.missing_ids,
                }
            )
        return JSONResponse(
            {
                "kind": "calibration",
                "session_id": outcome.session_id,
                "candidate_count": outcome.candidate_count,
                "missing_ids": outcome.missing_ids,
            }
        )

    @app.get("/v1/sessions/{session_id}/next")
    def next_probe(session_id: str) -> JSONResponse:
        session = engine.sessions.get(session_id)
        return JSONResponse(_probe_payload(session))

    @app.post("/v1/sessions/{session_id}/answer")
    def answer(session_id: str, payload: dict) -> JSONResponse:
        relevant = payload.get("relevant") if isinstance(payload, dict) else None
        if not isinstance(relevant, bool):
            return JSONResponse(
                status_code=400,
                content={"code": "syntax_error", "message": "body must carry a boolean 'relevant'"},
            )
        lock = engine.sessions.lock(session_id)
        if not lock.acquire(blocking=False):
            return JSONResponse(
                status_code=409,
                content={
                    "code": "session_done",
                    "message": "another answer for this session is in flight",
                },
            )
        try:
            session = engine.sessions.get(session_id)
            session.answer(relevant)
            engine.sessions.save(session)
            return JSONResponse(_probe_payload(session))
        finally:
            lock.release()

    @app.get("/v1/sessions/{session_id}/results")
    def results(session_id: str) -> JSONResponse:
        session = engine.sessions.get(session_id)
        if not session.done:
            raise SessionNotDoneError(f"session {session_id} is still running")
        image_ids = session.results()
        return JSONResponse(
            {
                "image_ids": image_ids,
                "scores": [session.score_of[i] for i in image_ids],
            }
        )

    @app.get("/v1/images/{image_id}")
    def image(image_id: str) -> Response:
        not_found = JSONResponse(
            status_code=404,
            content={"code": "session_not_found", "message": f"no image {image_id!r}"},
        )
        try:
            numeric_id = int(image_id)
        except ValueError:
            return not_found
        meta = engine.catalog.image_meta(numeric_id)
        if meta is None:
            return not_found
        path = _resolve_image_path(meta.file_path, images_root)
        if path is None:
            return not_found
        data = path.read_bytes()
        return Response(content=data, media_type=_sniff_media_type(data))

    return app
