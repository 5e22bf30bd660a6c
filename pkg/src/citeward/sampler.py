"""Reward-guided output selection over a pluggable generation backend.

Two strategies:

* holistic rejection sampling: draw N full candidates, keep the one with
  the highest combined reward;
* sentence-level beam search: grow a beam of partial answers one sentence
  at a time, asking the backend for K continuations per live state and
  keeping the top B states by the combined reward of their full prefix.

Both are deterministic given a deterministic backend and oracle, and both
persist a full trace of every candidate considered.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .core import DatasetMode, RewardWeights, Sentence, TaskExample
from .errors import EmptyResponse, IngestError, SamplerAborted
from .oracle import EntailmentOracle, fold_key
from .prompts import build_prompt
from .rewards import score_response
from .segment import parse_response, response_from_sentences

logger = logging.getLogger(__name__)

LONG_FORM_DEFAULT_DEPTH = 5
LIST_FORM_DEFAULT_DEPTH = 10


@dataclass(frozen=True)
class Candidate:
    """One backend continuation: its text, whether the backend considers the
    answer complete, and optional per-token logprobs."""

    text: str
    finished: bool
    token_logprobs: tuple[float, ...] | None = None


class GenerationBackend(Protocol):
    def generate(
        self,
        prompt: str,
        prefix: str,
        n: int,
        stop_at_sentence: bool,
        max_tokens: int,
        temperature: float,
    ) -> list[Candidate]:
        """Return up to n continuations of prefix; with stop_at_sentence the
        backend yields at most one sentence per candidate."""
        ...


@dataclass(frozen=True)
class SamplerConfig:
    """Search hyperparameters. max_depth of None resolves per dataset mode:
    5 for long-form answers, 10 for list-form (list questions carry more
    key items on average)."""

    beam_width: int = 8
    branching: int = 2
    max_depth: int | None = None
    holistic_n: int = 16
    max_tokens: int = 200
    temperature: float = 0.7

    def __post_init__(self):
        for name in ("beam_width", "branching", "holistic_n", "max_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"sampler config {name} must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("sampler config max_depth must be >= 1")

    def resolved_depth(self, mode: DatasetMode) -> int:
        if self.max_depth is not None:
            return self.max_depth
        return (
            LIST_FORM_DEFAULT_DEPTH
            if mode is DatasetMode.LIST_FORM
            else LONG_FORM_DEFAULT_DEPTH
        )


class ScriptedBackend:
    """Deterministic table-driven backend: maps a (normalized) prefix to a
    fixed candidate list. Missing prefixes yield no continuations."""

    def __init__(self, table: dict[str, list[Candidate]]):
        self.table = {fold_key(k): list(v) for k, v in table.items()}
        self.calls = 0

    def generate(self, prompt, prefix, n, stop_at_sentence, max_tokens, temperature):
        self.calls += 1
        return list(self.table.get(fold_key(prefix), []))[:n]


class ScriptedBackendSet:
    """Per-example scripted candidate tables loaded from one file."""

    def __init__(self, tables: dict[str, dict[str, list[Candidate]]]):
        self.tables = tables

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackendSet":
        """Load {"entries": [{example_id, prefix, candidates: [{text,
        finished, token_logprobs?}]}, ...]}."""
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IngestError(f"cannot read backend table {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise IngestError(f"malformed backend table {path}: {exc}") from exc
        tables: dict[str, dict[str, list[Candidate]]] = {}
        for entry in payload.get("entries", []):
            try:
                candidates = [
                    Candidate(
                        text=c["text"],
                        finished=bool(c.get("finished", False)),
                        token_logprobs=tuple(c["token_logprobs"])
                        if c.get("token_logprobs") is not None
                        else None,
                    )
                    for c in entry["candidates"]
                ]
                per_example = tables.setdefault(entry["example_id"], {})
                per_example[entry["prefix"]] = candidates
            except KeyError as exc:
                raise IngestError(f"backend table entry missing field {exc}") from exc
        return cls(tables)

    def for_example(self, example_id: str) -> ScriptedBackend:
        return ScriptedBackend(self.tables.get(example_id, {}))


class RemoteBackend:
    """HTTP client for a generation service speaking the /generate wire
    protocol."""

    def __init__(
        self,
        generate_url: str,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
    ):
        self.generate_url = generate_url
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff

    def generate(self, prompt, prefix, n, stop_at_sentence, max_tokens, temperature):
        body = {
            "prompt": prompt,
            "prefix": prefix,
            "n": n,
            "stop_at_sentence": stop_at_sentence,
            "max_tokens": max_tokens,
            "temperature": temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                resp = requests.post(self.generate_url, json=body, timeout=self.timeout)
                resp.raise_for_status()
                payload = resp.json()
                return [
                    Candidate(
                        text=c["text"],
                        finished=bool(c.get("finished", False)),
                        token_logprobs=tuple(c["token_logprobs"])
                        if c.get("token_logprobs") is not None
                        else None,
                    )
                    for c in payload["candidates"]
                ][:n]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.max_attempts:
                    time.sleep(self.backoff * (2**attempt))
        raise SamplerAborted(
            f"generation backend at {self.generate_url} failed after "
            f"{self.max_attempts} attempts: {last_error}"
        )


@dataclass(frozen=True)
class BeamState:
    """A partial generation with its accumulated combined reward.

    birth_order is a globally increasing creation counter used as the
    stable tie-break key; parent_order links the search tree for traces.
    """

    sentences: tuple[Sentence, ...]
    reward: float
    finished: bool
    birth_order: int
    parent_order: int | None = None
    new_text: str = ""
    components: tuple[float, float, float] = (0.0, 0.0, 0.0)  # (r1, r2 total, r3 total)

    def prefix_text(self, mode: DatasetMode) -> str:
        return response_from_sentences(self.sentences, mode).full_text


@dataclass(frozen=True)
class TraceEntry:
    state_id: int
    parent_id: int | None
    new_text: str
    finished: bool
    reward: float
    r1: float
    r2_total: float
    r3_total: float
    kept: bool

    def to_record(self) -> dict:
        return {
            "state_id": self.state_id,
            "parent_id": self.parent_id,
            "new_text": self.new_text,
            "finished": self.finished,
            "reward": self.reward,
            "r1": self.r1,
            "r2_total": self.r2_total,
            "r3_total": self.r3_total,
            "kept": self.kept,
        }


@dataclass(frozen=True)
class StepRecord:
    step: int
    entries: tuple[TraceEntry, ...]

    def to_record(self) -> dict:
        return {"step": self.step, "states": [e.to_record() for e in self.entries]}


@dataclass(frozen=True)
class ScoredCandidate:
    index: int
    text: str
    reward: float | None
    finished: bool


@dataclass(frozen=True)
class HolisticResult:
    best_text: str
    best_reward: float
    candidates: tuple[ScoredCandidate, ...]


@dataclass(frozen=True)
class BeamResult:
    best_text: str
    best_reward: float
    trace: tuple[StepRecord, ...]


def holistic_rs(
    example: TaskExample,
    backend: GenerationBackend,
    oracle: EntailmentOracle,
    weights: RewardWeights = RewardWeights(),
    config: SamplerConfig = SamplerConfig(),
    prompt: str | None = None,
    strict_em: bool = False,
) -> HolisticResult:
    """Best-of-N selection by the combined reward of each full candidate.

    Ties go to the lowest candidate index. Candidates that parse to nothing
    are kept in the log with a null reward and only win if nothing else is
    scorable.
    """
    if prompt is None:
        prompt = build_prompt(example, include_demos=False)
    try:
        raw = backend.generate(
            prompt, "", config.holistic_n, False, config.max_tokens, config.temperature
        )
    except SamplerAborted:
        raise
    except Exception as exc:
        raise SamplerAborted(f"generation backend failed: {exc}") from exc
    if not raw:
        raise SamplerAborted("generation backend returned no candidates")

    scored: list[ScoredCandidate] = []
    for i, cand in enumerate(raw):
        try:
            parsed = parse_response(cand.text, example)
            reward = score_response(parsed, example, oracle, weights, strict_em).combined
        except EmptyResponse:
            reward = None
        scored.append(ScoredCandidate(i, cand.text, reward, cand.finished))

    scorable = [c for c in scored if c.reward is not None]
    if scorable:
        best = max(scorable, key=lambda c: (c.reward, -c.index))
        return HolisticResult(best.text, best.reward, tuple(scored))
    logger.warning("holistic sampling for %s produced no scorable candidate", example.example_id)
    return HolisticResult(scored[0].text, float("-inf"), tuple(scored))


def fine_grained_beam_search(
    example: TaskExample,
    backend: GenerationBackend,
    oracle: EntailmentOracle,
    weights: RewardWeights = RewardWeights(),
    config: SamplerConfig = SamplerConfig(),
    prompt: str | None = None,
    strict_em: bool = False,
) -> BeamResult:
    """Sentence-level beam search guided by the combined reward.

    Each step extends every unfinished state with up to `branching`
    one-sentence continuations, rescores each child on its full prefix, and
    keeps the best `beam_width` states (finished states stay in and compete
    for slots). The search ends when every state is finished or the depth
    limit is reached; the highest-reward state wins, ties broken by
    creation order.
    """
    if prompt is None:
        prompt = build_prompt(example, include_demos=False)
    mode = example.dataset_mode
    depth = config.resolved_depth(mode)

    root = BeamState(sentences=(), reward=0.0, finished=False, birth_order=0)
    beam: list[BeamState] = [root]
    next_birth = 1
    trace: list[StepRecord] = []

    for step in range(1, depth + 1):
        unfinished = [s for s in beam if not s.finished]
        if not unfinished:
            break
        finished_pool = [s for s in beam if s.finished]

        # gather continuations; sorting by (parent birth, candidate index)
        # keeps results independent of request completion order
        gathered: list[tuple[BeamState, int, Candidate]] = []
        for state in unfinished:
            try:
                cands = backend.generate(
                    prompt,
                    state.prefix_text(mode),
                    config.branching,
                    True,
                    config.max_tokens,
                    config.temperature,
                )
            except SamplerAborted as exc:
                exc.partial = [s.prefix_text(mode) for s in beam]
                raise
            except Exception as exc:
                raise SamplerAborted(
                    f"generation backend failed: {exc}",
                    partial=[s.prefix_text(mode) for s in beam],
                ) from exc
            if not cands:
                gathered.append((state, 0, Candidate(text="", finished=True)))
                continue
            for idx, cand in enumerate(cands):
                gathered.append((state, idx, cand))
        gathered.sort(key=lambda item: (item[0].birth_order, item[1]))

        children: list[BeamState] = []
        stalled_parents: set[int] = set()
        for state, idx, cand in gathered:
            new_sentences = (
                tuple(parse_response(cand.text, example).sentences)
                if cand.text.strip()
                else ()
            )
            if not new_sentences:
                # no progress: keep the parent's prefix alive as a finished
                # state (once), guaranteeing termination
                if state.birth_order in stalled_parents:
                    continue
                stalled_parents.add(state.birth_order)
                children.append(
                    BeamState(
                        sentences=state.sentences,
                        reward=state.reward,
                        finished=True,
                        birth_order=next_birth,
                        parent_order=state.birth_order,
                        new_text="",
                        components=state.components,
                    )
                )
                next_birth += 1
                continue
            extended = state.sentences + new_sentences
            breakdown = score_response(
                response_from_sentences(extended, mode),
                example,
                oracle,
                weights,
                strict_em,
            )
            children.append(
                BeamState(
                    sentences=extended,
                    reward=breakdown.combined,
                    finished=cand.finished,
                    birth_order=next_birth,
                    parent_order=state.birth_order,
                    new_text=" ".join(s.raw_text for s in new_sentences),
                    components=(breakdown.r1, breakdown.r2_total, breakdown.r3_total),
                )
            )
            next_birth += 1

        pool = finished_pool + children
        pool.sort(key=lambda s: (-s.reward, s.birth_order))
        survivors = pool[: config.beam_width]
        kept_ids = {s.birth_order for s in survivors}
        trace.append(
            StepRecord(
                step=step,
                entries=tuple(
                    TraceEntry(
                        state_id=s.birth_order,
                        parent_id=s.parent_order,
                        new_text=s.new_text,
                        finished=s.finished,
                        reward=s.reward,
                        r1=s.components[0],
                        r2_total=s.components[1],
                        r3_total=s.components[2],
                        kept=s.birth_order in kept_ids,
                    )
                    for s in pool
                ),
            )
        )
        beam = survivors

    best = min(beam, key=lambda s: (-s.reward, s.birth_order))
    return BeamResult(best.prefix_text(mode), best.reward, tuple(trace))
