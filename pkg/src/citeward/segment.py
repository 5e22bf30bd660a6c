"""Deterministic decomposition of generated answers into scored units.

Long-form answers split into sentences at terminator punctuation; list-form
answers split at top-level commas. Both paths are pure functions of their
inputs: rule-based segmentation keeps the scoring core reproducible and free
of model dependencies.
"""

from __future__ import annotations

import logging
import re
from dataclasses import replace
from typing import Sequence

from .core import (
    DatasetMode,
    ParsedResponse,
    Sentence,
    TaskExample,
    extract_citations,
    normalize_ws,
    strip_citations,
)
from .errors import EmptyResponse

logger = logging.getLogger(__name__)

_TERMINATORS = ".!?"

# Trailing tokens (lowercased, terminator included) that do not end a
# sentence. Deliberately short: entries like "no." or "st." misfire on
# ordinary prose more often than they help.
ABBREVIATIONS = frozenset(
    {
        "e.g.",
        "i.e.",
        "etc.",
        "vs.",
        "cf.",
        "al.",
        "dr.",
        "mr.",
        "mrs.",
        "ms.",
        "prof.",
        "u.s.",
        "u.k.",
    }
)

_TRAILING_BRACKET = re.compile(r"\s*\[(\d+)\]")


def _is_abbreviation(text: str, dot_idx: int) -> bool:
    start = dot_idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : dot_idx + 1].lower() in ABBREVIATIONS


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of each sentence; the spans partition the input.

    A sentence ends at `.`, `!`, or `?` followed by whitespace or
    end-of-text. Citation brackets immediately after the terminator stay
    attached to the sentence they follow, and abbreviation periods do not
    terminate. Inter-sentence whitespace belongs to the preceding span.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch not in _TERMINATORS:
            i += 1
            continue
        if ch == "." and _is_abbreviation(text, i):
            i += 1
            continue
        j = i + 1
        while True:
            m = _TRAILING_BRACKET.match(text, j)
            if m and any(c != "0" for c in m.group(1)):
                j = m.end()
            else:
                break
        if j < n and not text[j].isspace():
            i += 1
            continue
        while j < n and text[j].isspace():
            j += 1
        spans.append((start, j))
        start = j
        i = j
    if start < n:
        spans.append((start, n))
    return spans


def split_sentences(text: str) -> list[str]:
    """Split a long-form answer into whitespace-normalized sentence texts."""
    if not normalize_ws(text):
        raise EmptyResponse("cannot segment an empty response")
    return [normalize_ws(text[a:b]) for a, b in sentence_spans(text)]


def split_items(text: str) -> list[str]:
    """Split a list-form answer into comma-separated items.

    One trailing period is trimmed (it is list punctuation, not part of the
    final item). Items are whitespace-normalized; empties survive here and
    are dropped later by parse_response.
    """
    if not normalize_ws(text):
        raise EmptyResponse("cannot segment an empty response")
    body = text.rstrip()
    if body.endswith("."):
        body = body[:-1]
    return [normalize_ws(part) for part in body.split(",")]


def item_hypothesis(question: str, item_clean_text: str) -> str:
    """Entailment hypothesis for one list item: the question plus the item."""
    return f"{question} {item_clean_text}"


def parse_response(text: str, example: TaskExample) -> ParsedResponse:
    """Decompose a raw response for the example's dataset mode.

    Citations are extracted per sentence (deduplicated, first-appearance
    order) and marked valid against the example's passage count. Segments
    left with no text once citations are stripped carry nothing entailable
    and are dropped.
    """
    if example.dataset_mode is DatasetMode.LIST_FORM:
        raw_segments = split_items(text)
    else:
        raw_segments = split_sentences(text)

    sentences: list[Sentence] = []
    for raw in raw_segments:
        clean = strip_citations(raw)
        # a segment that is only citations, whitespace, and punctuation has
        # nothing entailable left once stripped
        if not any(ch.isalnum() for ch in clean):
            if raw:
                logger.debug("dropping segment with no entailable content: %r", raw)
            continue
        sentences.append(
            Sentence(
                raw_text=raw,
                clean_text=clean,
                citations=extract_citations(raw, example.passage_count),
                position=len(sentences) + 1,
            )
        )
    return ParsedResponse(tuple(sentences), normalize_ws(text))


def join_sentences(raw_texts: Sequence[str], mode: DatasetMode) -> str:
    """Reassemble raw sentence texts with the mode's natural separator."""
    sep = ", " if mode is DatasetMode.LIST_FORM else " "
    return sep.join(raw_texts)


def response_from_sentences(
    sentences: Sequence[Sentence], mode: DatasetMode
) -> ParsedResponse:
    """Build a ParsedResponse from already-parsed sentences (e.g. a beam
    prefix), renumbering positions from 1."""
    renumbered = tuple(
        replace(s, position=i) for i, s in enumerate(sentences, start=1)
    )
    return ParsedResponse(
        renumbered, join_sentences([s.raw_text for s in renumbered], mode)
    )
