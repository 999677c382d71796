"""HTTP front end: a thin FastAPI wrapper around one immutable Engine.

Answers come back as a bare JSON array of answer records; pipeline
diagnostics ride in the ``X-Diagnostic`` response header so the body shape
stays the same whether or not anything was found.  All client mistakes map
to 400 with a machine-readable ``{"error": ...}`` body.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine, PipelineConfig
from .parsing import NoPatternMatch


class AskRequest(BaseModel):
    question: str
    answers: Optional[int] = None
    max_relax: Optional[int] = None


class AnswerRecordModel(BaseModel):
    answer_text: str
    bindings: dict[str, str]
    confidence: float
    passage_id: str
    passage_text: str
    highlight_spans: list[tuple[int, int]]
    relax_count: int
    dropped_subgoals: list[str]


def create_app(config: Optional[PipelineConfig] = None, engine: Optional[Engine] = None) -> FastAPI:
    if engine is None:
        engine = Engine(config or PipelineConfig.from_env())
    app = FastAPI(title="logquest", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.exception_handler(RequestValidationError)
    async def on_invalid_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        for error in exc.errors():
            if error.get("type") == "missing":
                field = error.get("loc", ("?",))[-1]
                return JSONResponse({"error": f"missing field: {field}"}, status_code=400)
        return JSONResponse({"error": "invalid request"}, status_code=400)

    @app.exception_handler(NoPatternMatch)
    async def on_no_pattern(request: Request, exc: NoPatternMatch) -> JSONResponse:
        return JSONResponse({"error": "question not understood"}, status_code=400)

    @app.post("/ask", response_model=list[AnswerRecordModel])
    def ask(body: AskRequest, response: Response):
        try:
            result = engine.ask(body.question, body.answers, body.max_relax)
        except NoPatternMatch:
            raise
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if result.diagnostic:
            response.headers["X-Diagnostic"] = result.diagnostic
        return [AnswerRecordModel(**record.to_dict()) for record in result.records]

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "passages": engine.index.doc_count,
            "background_clauses": len(engine.background),
        }

    @app.get("/config")
    def config_view() -> dict:
        return engine.config.to_dict()

    ui_dir = Path(engine.config.ui_dir) if engine.config.ui_dir else None
    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
