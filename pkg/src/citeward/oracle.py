"""Binary judgments backing the rewards: entailment and exact-match containment.

An oracle answers "does this premise entail this hypothesis?". The scripted
implementation replays a fixed table (tests, golden runs); the remote one
talks to an NLI service over HTTP. Every oracle carries a mandatory
in-memory memo keyed by normalized inputs, since beam search re-scores shared
prefixes heavily; memoization also pins judgments to be stable within a
session.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .core import CitationRef, Passage, normalize_ws
from .errors import IngestError, OracleUnavailable

logger = logging.getLogger(__name__)


def fold_key(text: str) -> str:
    """Normalization used for oracle table keys and EM matching: lowercase
    with collapsed whitespace."""
    return normalize_ws(text).casefold()


class EntailmentOracle(ABC):
    """Deterministic binary entailment judge with a built-in memo."""

    def __init__(self):
        self._memo: dict[tuple[str, str], bool] = {}
        self._memo_lock = threading.Lock()

    def entails(self, premise: str, hypothesis: str) -> bool:
        """Judge whether premise entails hypothesis.

        An empty premise is never entailing and never reaches the backend.
        """
        if not hypothesis.strip():
            raise ValueError("entailment hypothesis must be non-empty")
        if not premise.strip():
            return False
        key = (fold_key(premise), fold_key(hypothesis))
        with self._memo_lock:
            if key in self._memo:
                return self._memo[key]
        verdict = bool(self._judge(premise, hypothesis))
        with self._memo_lock:
            # first writer wins so concurrent duplicates stay consistent
            return self._memo.setdefault(key, verdict)

    @abstractmethod
    def _judge(self, premise: str, hypothesis: str) -> bool:
        """Backend-specific judgment; only called with non-empty inputs."""


def entails(oracle: EntailmentOracle, premise: str, hypothesis: str) -> bool:
    return oracle.entails(premise, hypothesis)


class ScriptedOracle(EntailmentOracle):
    """Table-driven oracle for tests and reproducible golden runs.

    Lookups outside the table return `default`. Keys are normalized with
    :func:`fold_key` at load time.
    """

    def __init__(self, table: dict[tuple[str, str], bool] | None = None, default: bool = False):
        super().__init__()
        self.default = default
        self.table: dict[tuple[str, str], bool] = {}
        for (premise_key, hypothesis_key), verdict in (table or {}).items():
            self._add(premise_key, hypothesis_key, verdict)

    def _add(self, premise_key: str, hypothesis_key: str, verdict: bool) -> None:
        key = (fold_key(premise_key), fold_key(hypothesis_key))
        if key in self.table:
            raise ValueError(f"duplicate oracle table key: {key!r}")
        self.table[key] = bool(verdict)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedOracle":
        """Load a table file: {"default": bool, "entries": [{premise_key,
        hypothesis_key, entailed}, ...]}."""
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IngestError(f"cannot read oracle table {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise IngestError(f"malformed oracle table {path}: {exc}") from exc
        oracle = cls(default=bool(payload.get("default", False)))
        for entry in payload.get("entries", []):
            try:
                oracle._add(entry["premise_key"], entry["hypothesis_key"], entry["entailed"])
            except KeyError as exc:
                raise IngestError(f"oracle table entry missing field {exc}") from exc
        return oracle

    def _judge(self, premise: str, hypothesis: str) -> bool:
        return self.table.get((fold_key(premise), fold_key(hypothesis)), self.default)


class RemoteOracle(EntailmentOracle):
    """HTTP client for an NLI service speaking the /nli wire protocol.

    Never blocks longer than timeout x attempts; premises longer than
    `max_premise_chars` are truncated from the end before transmission.
    In-flight requests are capped so a shared oracle cannot flood the
    backend under concurrent scoring.
    """

    def __init__(
        self,
        nli_url: str,
        timeout: float = 30.0,
        max_premise_chars: int = 8000,
        max_attempts: int = 3,
        backoff: float = 0.5,
        max_in_flight: int = 4,
    ):
        super().__init__()
        self.nli_url = nli_url
        self.timeout = timeout
        self.max_premise_chars = max_premise_chars
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._in_flight = threading.Semaphore(max_in_flight)

    def _judge(self, premise: str, hypothesis: str) -> bool:
        if len(premise) > self.max_premise_chars:
            logger.warning(
                "truncating premise from %d to %d chars before NLI call",
                len(premise),
                self.max_premise_chars,
            )
            premise = premise[: self.max_premise_chars]
        body = {"premise": premise, "hypothesis": hypothesis}
        last_error: Exception | None = None
        with self._in_flight:
            for attempt in range(self.max_attempts):
                try:
                    resp = requests.post(self.nli_url, json=body, timeout=self.timeout)
                    resp.raise_for_status()
                    return bool(resp.json()["entailed"])
                except (requests.RequestException, KeyError, ValueError) as exc:
                    last_error = exc
                    if attempt + 1 < self.max_attempts:
                        time.sleep(self.backoff * (2**attempt))
        raise OracleUnavailable(
            f"NLI backend at {self.nli_url} failed after "
            f"{self.max_attempts} attempts: {last_error}"
        )


def em_contains(response_clean_text: str, key_item: str, strict: bool = False) -> bool:
    """Exact-match containment of one key item in a citation-stripped
    response.

    Default matching is case-folded with collapsed whitespace, which avoids
    false negatives from sentence-initial capitalization; `strict` disables
    the case folding.
    """
    if not key_item:
        raise ValueError("key item must be non-empty")
    if strict:
        return normalize_ws(key_item) in normalize_ws(response_clean_text)
    return fold_key(key_item) in fold_key(response_clean_text)


def render_passage(passage: Passage) -> str:
    """Render one passage the way prompts present documents."""
    if passage.title:
        return f"Title: {passage.title}. {passage.body}"
    return passage.body


def concat_premise(
    citations: Iterable[CitationRef], passages: Sequence[Passage]
) -> str:
    """Join the rendered bodies of the *valid* cited passages, in citation
    order. Invalid citations contribute nothing; no citations yield the
    empty premise."""
    by_index = {p.index: p for p in passages}
    parts = [
        render_passage(by_index[c.passage_index])
        for c in citations
        if c.valid and c.passage_index in by_index
    ]
    return " ".join(parts)
