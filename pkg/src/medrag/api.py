"""JSON-over-HTTP service wrapping one configured pipeline.

Error bodies share one flat shape: {"code", "message"} plus "position"
when the code is parse_error, so the frontend can point a caret at the
offending character. Codes map to statuses as bad_request=400,
parse_error=422, not_found=404, upstream_llm=502, internal=500.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from medrag.evaluation import pubmed_url
from medrag.gateway import GatewayError
from medrag.pipeline import Pipeline, PipelineError, result_to_dict
from medrag.querylang import ParseError, parse


class ExpandBody(BaseModel):
    question: str


class SearchBody(BaseModel):
    query: str
    top_k: int = Field(default=50, ge=1, le=200)


class AskBody(BaseModel):
    question: str
    query_override: str | None = None


def _error(code: str, status: int, message: str, position: int | None = None):
    content: dict = {"code": code, "message": message}
    if position is not None:
        content["position"] = position
    return JSONResponse(status_code=status, content=content)


def create_app(
    pipeline: Pipeline,
    backend_name: str = "stub",
    frontend_dir: Path | str | None = None,
) -> FastAPI:
    app = FastAPI(title="medrag", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def on_bad_body(request, exc: RequestValidationError):
        return _error("bad_request", 400, str(exc.errors()[0]["msg"]))

    @app.exception_handler(Exception)
    async def on_uncaught(request, exc: Exception):
        return _error("internal", 500, "internal error")

    @app.post("/api/expand")
    def expand(body: ExpandBody):
        if not body.question.strip():
            return _error("bad_request", 400, "question must be non-blank")
        try:
            expansion = pipeline.expand_question(body.question)
        except (PipelineError, GatewayError) as error:
            return _error("upstream_llm", 502, str(error))
        return {
            "expanded_query": expansion.expanded_query,
            "query_source": expansion.query_source,
        }

    @app.post("/api/search")
    def search(body: SearchBody):
        try:
            ast = parse(body.query)
        except ParseError as error:
            return _error("parse_error", 422, error.message, position=error.position)
        hits = pipeline.index.search(ast, body.top_k)
        return {
            "hits": [
                {
                    "pmid": hit.pmid,
                    "score": hit.score,
                    "title": _title_of(hit.pmid),
                }
                for hit in hits
            ]
        }

    @app.post("/api/ask")
    def ask(body: AskBody):
        if not body.question.strip():
            return _error("bad_request", 400, "question must be non-blank")
        try:
            if body.query_override is not None:
                result = pipeline.ask_with_query(body.question, body.query_override)
            else:
                result = pipeline.ask(body.question)
        except ParseError as error:
            return _error("parse_error", 422, error.message, position=error.position)
        except (PipelineError, GatewayError) as error:
            return _error("upstream_llm", 502, str(error))
        return result_to_dict(result, pipeline.corpus)

    @app.get("/api/document/{pmid}")
    def document(pmid: str):
        if not pmid.isdigit():
            return _error("bad_request", 400, f"pmid must be numeric, got {pmid!r}")
        found = pipeline.corpus.get(int(pmid))
        if found is None:
            return _error("not_found", 404, f"no document with pmid {pmid}")
        return {
            "pmid": found.pmid,
            "title": found.title,
            "abstract": found.abstract_text,
            "pubmed_url": pubmed_url(found.pmid),
        }

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "corpus_size": len(pipeline.corpus),
            "backend": backend_name,
        }

    def _title_of(pmid: int) -> str:
        found = pipeline.corpus.get(pmid)
        return found.title if found is not None else ""

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
