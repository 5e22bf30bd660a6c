"""FastAPI wiring for the three endpoints.

The /nli handler short-circuits empty premises to not-entailed without
touching the model, truncates over-long premises to the configured window
(reporting it in the response), and judges greedily so fixed inputs give
fixed verdicts. /generate honors the n and max_tokens caps. Any handler
failure becomes a structured JSON error body, never a hung connection.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import AdapterConfig
from .generation import build_generation_model
from .nli import build_nli_model
from .schemas import (
    CandidateOut,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    NliRequest,
    NliResponse,
)

logger = logging.getLogger(__name__)


def create_app(config: AdapterConfig | None = None) -> FastAPI:
    config = config or AdapterConfig()
    nli_model = build_nli_model(config.nli)
    generation_model = build_generation_model(config.generation)

    app = FastAPI(title="citeward-adapter", docs_url=None, redoc_url=None)

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        logger.exception("request to %s failed", request.url.path)
        return JSONResponse(
            status_code=500,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            model_ids={
                "nli": nli_model.model_id,
                "generation": generation_model.model_id,
            },
        )

    @app.post("/nli", response_model=NliResponse)
    def nli(request: NliRequest) -> NliResponse:
        premise = request.premise
        if not premise.strip():
            return NliResponse(entailed=False, score=0.0, truncated=False)
        truncated = len(premise) > config.nli.max_premise_chars
        if truncated:
            premise = premise[: config.nli.max_premise_chars]
        entailed, score = nli_model.judge(premise, request.hypothesis)
        return NliResponse(
            entailed=entailed, score=max(0.0, min(1.0, score)), truncated=truncated
        )

    @app.post("/generate", response_model=GenerateResponse)
    def generate(request: GenerateRequest) -> GenerateResponse:
        candidates = generation_model.generate(
            request.prompt,
            request.prefix,
            request.n,
            request.stop_at_sentence,
            request.max_tokens,
            request.temperature,
        )
        return GenerateResponse(
            candidates=[
                CandidateOut(
                    text=c.text,
                    finished=c.finished,
                    token_logprobs=list(c.token_logprobs) if c.token_logprobs else None,
                )
                for c in candidates[: request.n]
            ]
        )

    return app
