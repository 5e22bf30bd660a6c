"""Adapter configuration: which model family backs each endpoint."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

NLI_FAMILIES = ("lexical", "hf-classifier", "hf-seq2seq")
GENERATION_FAMILIES = ("extractive", "hf-causal")


@dataclass(frozen=True)
class NliConfig:
    family: str = "lexical"
    model_id: str = ""
    device: str = "cpu"
    max_premise_chars: int = 6000

    def __post_init__(self):
        if self.family not in NLI_FAMILIES:
            raise ValueError(f"unknown NLI family {self.family!r}")
        if self.family.startswith("hf-") and not self.model_id:
            raise ValueError(f"NLI family {self.family} requires model_id")


@dataclass(frozen=True)
class GenerationConfig:
    family: str = "extractive"
    model_id: str = ""
    device: str = "cpu"
    max_batch: int = 4
    top_k: int = 20

    def __post_init__(self):
        if self.family not in GENERATION_FAMILIES:
            raise ValueError(f"unknown generation family {self.family!r}")
        if self.family.startswith("hf-") and not self.model_id:
            raise ValueError(f"generation family {self.family} requires model_id")


@dataclass(frozen=True)
class AdapterConfig:
    nli: NliConfig = field(default_factory=NliConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    host: str = "127.0.0.1"
    port: int = 8315


def load_config(path: str | Path | None = None) -> AdapterConfig:
    if path is None:
        return AdapterConfig()
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return AdapterConfig(
        nli=NliConfig(**payload.get("nli", {})),
        generation=GenerationConfig(**payload.get("generation", {})),
        host=payload.get("host", "127.0.0.1"),
        port=payload.get("port", 8315),
    )
