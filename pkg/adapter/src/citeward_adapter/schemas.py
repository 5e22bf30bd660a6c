"""Wire protocol schemas. Responses are validated against these models
before leaving the service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class NliRequest(BaseModel):
    premise: str
    hypothesis: str


class NliResponse(BaseModel):
    entailed: bool
    score: float = Field(ge=0.0, le=1.0)
    truncated: bool = False


class GenerateRequest(BaseModel):
    prompt: str
    prefix: str = ""
    n: int = Field(default=1, ge=1, le=64)
    stop_at_sentence: bool = False
    max_tokens: int = Field(default=200, ge=1, le=4096)
    temperature: float = Field(default=0.7, ge=0.0, le=2.0)


class CandidateOut(BaseModel):
    text: str
    finished: bool
    token_logprobs: list[float] | None = None


class GenerateResponse(BaseModel):
    candidates: list[CandidateOut]


class HealthResponse(BaseModel):
    status: str
    model_ids: dict[str, str]
