"""HTTP+JSON surface over the tutor service.

Handlers are plain (sync) functions, so the framework runs them in its thread
pool; the service core does its own per-thread serialization. Response field
names are part of the contract consumed by the browser frontend.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (InvalidConfig, MissingContext, ProviderRejected,
                     ProviderUnavailable, ScriptExhausted, UnknownTask, UnknownThread)
from .service import TutorResponse, TutorService


def _error(status: int, code: str, detail: str, headers: dict | None = None) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail},
                        headers=headers)


def _response_body(result: TutorResponse) -> dict:
    return {
        "text": result.text,
        "scope": {
            "verdict": result.scope.verdict.value,
            "top_score": result.scope.top_score,
        },
        "leak": {
            "leaked": result.leak.leaked,
            "action": result.leak.action_taken,
        },
        "usage": result.usage.to_dict(),
        "interaction_id": result.interaction_id,
    }


def create_app(service: TutorService) -> FastAPI:
    app = FastAPI(title="course-tutor", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    @app.exception_handler(UnknownThread)
    def _unknown_thread(_req: Request, exc: UnknownThread):
        return _error(404, "unknown_thread", str(exc))

    @app.exception_handler(UnknownTask)
    def _unknown_task(_req: Request, exc: UnknownTask):
        return _error(404, "unknown_task", str(exc))

    @app.exception_handler(MissingContext)
    def _missing_context(_req: Request, exc: MissingContext):
        return _error(400, "missing_context", str(exc))

    @app.exception_handler(InvalidConfig)
    def _invalid_config(_req: Request, exc: InvalidConfig):
        return JSONResponse(status_code=400,
                            content={"error": "invalid_config", "fields": exc.fields})

    @app.exception_handler(ProviderUnavailable)
    def _provider_unavailable(_req: Request, exc: ProviderUnavailable):
        headers = {}
        if exc.retry_after is not None:
            headers["Retry-After"] = str(exc.retry_after)
        return _error(503, "provider_unavailable", str(exc), headers=headers)

    @app.exception_handler(ProviderRejected)
    def _provider_rejected(_req: Request, exc: ProviderRejected):
        return _error(502, "provider_rejected", str(exc))

    @app.exception_handler(ScriptExhausted)
    def _script_exhausted(_req: Request, exc: ScriptExhausted):
        return _error(503, "provider_unavailable", str(exc))

    @app.post("/api/sessions")
    def create_session():
        return {"thread_id": service.create_session()}

    @app.post("/api/sessions/{thread_id}/messages")
    def post_message(thread_id: str, payload: dict = Body(...)):
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            return _error(400, "invalid_request", "field 'text' must be a non-empty string")
        awareness = payload.get("awareness")
        if awareness is not None and awareness not in ("none", "task", "code", "task_and_code"):
            return _error(400, "invalid_request",
                          "field 'awareness' must be one of none, task, code, task_and_code")
        result = service.post_message(
            thread_id,
            text,
            awareness=awareness,
            task_id=payload.get("task_id"),
            code=payload.get("code"),
        )
        return _response_body(result)

    @app.get("/api/tasks")
    def list_tasks():
        return [task.to_dict() for task in service.list_tasks()]

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        return service.get_task(task_id).to_dict()

    @app.get("/api/config")
    def get_config():
        data = service.get_config().to_dict()
        data["config_version"] = service.config_version
        return data

    @app.put("/api/config")
    def put_config(patch: dict = Body(...)):
        updated = service.put_config(patch)
        data = updated.to_dict()
        data["config_version"] = service.config_version
        return data

    @app.get("/api/health")
    def health():
        return service.health()

    return app
