"""Run configuration: weights, sampler settings, backend wiring, and mode
flags, with file loading and CITEWARD_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .core import RewardWeights
from .errors import IngestError
from .sampler import SamplerConfig

ENV_PREFIX = "CITEWARD_"

BETA_DEFAULT = 0.3


@dataclass(frozen=True)
class BackendConfig:
    """Where judgments and generations come from: remote endpoints or
    scripted table files."""

    nli_url: str | None = None
    generate_url: str | None = None
    oracle_path: str | None = None
    backend_path: str | None = None
    timeout: float = 30.0
    max_attempts: int = 3
    max_in_flight: int = 4
    max_premise_chars: int = 8000


@dataclass(frozen=True)
class RunConfig:
    weights: RewardWeights = field(default_factory=RewardWeights)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    beta: float = BETA_DEFAULT
    strict_em: bool = False
    calibration: bool = False
    include_demos: bool = False
    workers: int = 4

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "weights": RewardWeights,
    "sampler": SamplerConfig,
    "backend": BackendConfig,
}


def _build_section(cls, payload: dict, path: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in payload.items():
        if key not in known:
            raise ValueError(f"unknown config key {path}.{key}")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid config section {path}: {exc}") from exc


def config_from_dict(payload: dict) -> RunConfig:
    kwargs: dict = {}
    for key, value in payload.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValueError(f"config section {key} must be an object")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif key in {"beta", "strict_em", "calibration", "include_demos", "workers"}:
            kwargs[key] = value
        else:
            raise ValueError(f"unknown config key {key}")
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid config: {exc}") from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a JSON config file (defaults when path is None), then apply
    environment overrides."""
    if path is None:
        config = RunConfig()
    else:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IngestError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise IngestError(f"malformed config {path}: {exc}") from exc
        config = config_from_dict(payload)
    return apply_env_overrides(config)


def _coerce(raw: str, template):
    if isinstance(template, bool) or template is None and raw.lower() in {"true", "false"}:
        return raw.lower() == "true"
    if isinstance(template, int) and not isinstance(template, bool):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if template is None:
        # untyped optional slot: try int, then float, else string
        for cast in (int, float):
            try:
                return cast(raw)
            except ValueError:
                continue
        return raw
    return raw


def apply_env_overrides(config: RunConfig, environ: dict | None = None) -> RunConfig:
    """Override config values from CITEWARD_<SECTION>_<KEY> (or
    CITEWARD_<KEY> for top-level fields) environment variables."""
    env = environ if environ is not None else os.environ
    payload = config.to_dict()
    for name, raw in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        tail = name[len(ENV_PREFIX) :].lower()
        section, _, key = tail.partition("_")
        if section in _SECTIONS and key in payload[section]:
            payload[section][key] = _coerce(raw, payload[section][key])
        elif tail in payload and tail not in _SECTIONS:
            payload[tail] = _coerce(raw, payload[tail])
        else:
            raise ValueError(f"unrecognized environment override {name}")
    return config_from_dict(payload)
