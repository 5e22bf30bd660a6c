"""Domain types shared by every module, plus text normalization primitives.

Everything here is immutable after construction and safe to share across
concurrent scoring tasks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class DatasetMode(Enum):
    """How a dataset formats its answers, which picks the segmentation and
    correctness rules downstream."""

    LONG_FORM = "long_form"  # prose answers (ASQA/ELI5-style)
    LIST_FORM = "list_form"  # comma-separated entity lists (QAMPARI-style)


class KeyInfoKind(Enum):
    EXACT_MATCH = "exact_match"  # short gold phrases checked by substring
    CLAIMS = "claims"  # full statements checked by entailment


_WS_RUN = re.compile(r"\s+")
# A citation is `[` digits `]` where the digits read as an integer >= 1.
# Anything else ([abc], [0]) is plain text.
_BRACKETED_DIGITS = re.compile(r"\[(\d+)\]")
_STRIPPABLE_CITATION = re.compile(r"\s*\[(\d+)\]")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


def _reads_as_citation(digits: str) -> bool:
    # int >= 1 without paying for int() on absurdly long digit runs
    return any(c != "0" for c in digits)


def strip_citations(text: str) -> str:
    """Remove every bracketed integer citation and renormalize whitespace.

    Whitespace immediately preceding a bracket goes with it, so
    "played by Wright King [2]." comes back as "played by Wright King.".
    """

    def _drop(m: re.Match) -> str:
        return "" if _reads_as_citation(m.group(1)) else m.group(0)

    return normalize_ws(_STRIPPABLE_CITATION.sub(_drop, text))


def iter_citation_matches(text: str) -> Iterator[re.Match]:
    """Yield regex matches for every well-formed citation bracket in text."""
    for m in _BRACKETED_DIGITS.finditer(text):
        if _reads_as_citation(m.group(1)):
            yield m


@dataclass(frozen=True)
class Passage:
    """One retrieved passage, indexed 1-based as cited in responses."""

    index: int
    title: str
    body: str


@dataclass(frozen=True)
class KeyInfoList:
    """The per-question gold information: short answers or derived claims."""

    kind: KeyInfoKind
    items: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class CitationRef:
    """A single bracketed citation inside a sentence.

    `span` is the (start, end) character range of the bracket token within
    the owning sentence's raw text. Out-of-range indices are kept with
    valid=False so precision scoring can penalize them.
    """

    passage_index: int
    valid: bool
    span: tuple[int, int]


@dataclass(frozen=True)
class Sentence:
    """One scored unit of a response: a prose sentence or a list item."""

    raw_text: str
    clean_text: str
    citations: tuple[CitationRef, ...]
    position: int  # 1-based within the parsed response


@dataclass(frozen=True)
class ParsedResponse:
    """A response decomposed into sentences; the unit all rewards operate on."""

    sentences: tuple[Sentence, ...]
    full_text: str

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)

    @property
    def citation_count(self) -> int:
        return sum(len(s.citations) for s in self.sentences)


@dataclass(frozen=True)
class RewardWeights:
    """Magnitudes of the correctness, recall, and precision reward units."""

    w1: float = 0.2
    w2: float = 0.2
    w3: float = 0.2

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            if getattr(self, name) < 0:
                raise ValueError(f"reward weight {name} must be non-negative")


@dataclass(frozen=True)
class TaskExample:
    """A question with its gold key information and retrieved passages."""

    example_id: str
    question: str
    dataset_mode: DatasetMode
    key_info: KeyInfoList
    passages: tuple[Passage, ...]

    @property
    def passage_count(self) -> int:
        return len(self.passages)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_example(example: TaskExample) -> ValidationReport:
    """Collect every invariant violation of an example without aborting.

    An example with an empty report is accepted by every downstream
    operation.
    """
    violations: list[str] = []
    if not example.example_id.strip():
        violations.append("empty example id")
    if not example.question.strip():
        violations.append("empty question")
    if not example.passages:
        violations.append("no passages")
    else:
        indices = [p.index for p in example.passages]
        if len(set(indices)) != len(indices):
            violations.append("duplicate passage indices")
        elif indices != list(range(1, len(indices) + 1)):
            violations.append("non-contiguous passage indices")
        for p in example.passages:
            if not p.body.strip():
                violations.append(f"empty passage body (index {p.index})")
    if example.key_info.count == 0:
        violations.append("empty key list")
    for i, item in enumerate(example.key_info.items, start=1):
        if not item.strip():
            violations.append(f"empty key item (position {i})")
    return ValidationReport(tuple(violations))


def extract_citations(raw_text: str, passage_count: int) -> tuple[CitationRef, ...]:
    """Pull the citation set out of one sentence's raw text.

    Citations are deduplicated by passage index, keeping the first
    occurrence; validity is judged against the owning example's passage
    count.
    """
    seen: set[int] = set()
    refs: list[CitationRef] = []
    for m in iter_citation_matches(raw_text):
        idx = int(m.group(1))
        if idx in seen:
            continue
        seen.add(idx)
        refs.append(
            CitationRef(
                passage_index=idx,
                valid=1 <= idx <= passage_count,
                span=(m.start(), m.end()),
            )
        )
    return tuple(refs)
