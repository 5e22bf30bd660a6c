"""Correctness, citation-recall, and citation-precision rewards, their
combined sequence score, and per-token reward placement for RL trainers.

Three signed reward families cover the task's sub-goals:

* correctness: one sequence-level value: +w1 per captured key item, −w1
  per missed one (list-form answers stop being penalized for misses once
  five items are captured);
* citation recall: per sentence: +w2 when the concatenation of its cited
  passages entails the sentence, −w2 otherwise (uncited sentences lose w2
  without an oracle call);
* citation precision: per citation: +w3 when the sentence is entailed by
  its full citation set AND this citation either entails the sentence on
  its own or is needed for the rest to do so; −w3 otherwise, and always −w3
  for citations pointing at nonexistent passages.

The combined reward of a (partial) response is the plain sum of all three
families over the covered prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    DatasetMode,
    KeyInfoKind,
    KeyInfoList,
    ParsedResponse,
    RewardWeights,
    Sentence,
    TaskExample,
    strip_citations,
)
from .errors import BoundaryMismatch
from .oracle import EntailmentOracle, concat_premise, em_contains
from .segment import item_hypothesis, response_from_sentences


@dataclass(frozen=True)
class CitationReward:
    """Signed precision reward for one citation.

    `citation_index` is 1-based within the owning sentence's citation list;
    `sentence_position` is the sentence's 1-based position.
    """

    sentence_position: int
    citation_index: int
    passage_index: int
    value: float


@dataclass(frozen=True)
class RewardBreakdown:
    """All reward components of one response.

    `combined` always equals r1 + sum(r2_per_sentence) + sum of the r3
    values. `degenerate_keys` flags an example whose key list was empty, in
    which case r1 and hits are zero by definition.
    """

    r1: float
    hits: int
    r2_per_sentence: tuple[float, ...]
    r3_per_citation: tuple[CitationReward, ...]
    combined: float
    degenerate_keys: bool = False

    @property
    def r2_total(self) -> float:
        return sum(self.r2_per_sentence)

    @property
    def r3_total(self) -> float:
        return sum(r.value for r in self.r3_per_citation)


def hypothesis_text(sentence: Sentence, example: TaskExample) -> str:
    """The NLI hypothesis for one sentence: its clean text, prefixed with
    the question for list-form items."""
    if example.dataset_mode is DatasetMode.LIST_FORM:
        return item_hypothesis(example.question, sentence.clean_text)
    return sentence.clean_text


def count_hits(
    clean_text: str,
    key_info: KeyInfoList,
    oracle: EntailmentOracle | None,
    strict_em: bool = False,
) -> int:
    """Number of key items captured by the given citation-stripped text.

    Exact-match items are checked by substring containment; claims by
    entailment with the response text as the premise.
    """
    if key_info.kind is KeyInfoKind.EXACT_MATCH:
        return sum(
            em_contains(clean_text, item, strict=strict_em) for item in key_info.items
        )
    if oracle is None:
        raise ValueError("claims-mode correctness requires an entailment oracle")
    if not clean_text.strip():
        return 0
    return sum(oracle.entails(clean_text, claim) for claim in key_info.items)


def correctness_reward(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle | None,
    w1: float,
    strict_em: bool = False,
) -> tuple[float, int]:
    """Sequence-level correctness reward and the hit count behind it.

    Long-form (and claims-checked) answers: r1 = w1*h − w1*(t − h).
    List-form answers: r1 = w1*h − w1*max(min(t, 5) − h, 0), so missing
    answers stop costing anything once five are captured.
    An empty key list yields (0.0, 0).
    """
    t = example.key_info.count
    if t == 0:
        return 0.0, 0
    h = count_hits(
        strip_citations(parsed.full_text), example.key_info, oracle, strict_em
    )
    if example.dataset_mode is DatasetMode.LIST_FORM:
        r1 = w1 * h - w1 * max(min(t, 5) - h, 0)
    else:
        r1 = w1 * h - w1 * (t - h)
    return r1, h


def citation_recall_rewards(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
    w2: float,
) -> list[float]:
    """Per-sentence recall rewards: +w2 when the concatenated cited passages
    entail the sentence, else −w2. Sentences with no valid citations have an
    empty premise and lose w2 without touching the backend."""
    rewards = []
    for sentence in parsed.sentences:
        premise = concat_premise(sentence.citations, example.passages)
        entailed = oracle.entails(premise, hypothesis_text(sentence, example))
        rewards.append(w2 if entailed else -w2)
    return rewards


def citation_precision_rewards(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
    w3: float,
) -> list[CitationReward]:
    """Per-citation precision rewards.

    A citation earns +w3 only when the full citation set entails the
    sentence (the gate) and the citation is not dead weight: it entails the
    sentence by itself, or removing it breaks the set's entailment.
    Citations to nonexistent passages are always −w3 and contribute nothing
    to any premise. At most 1 + 2*|C| oracle calls per sentence before
    memoization.
    """
    rewards: list[CitationReward] = []
    for sentence in parsed.sentences:
        hypothesis = hypothesis_text(sentence, example)
        gate = oracle.entails(
            concat_premise(sentence.citations, example.passages), hypothesis
        )
        for idx, citation in enumerate(sentence.citations, start=1):
            if not citation.valid or not gate:
                value = -w3
            elif oracle.entails(concat_premise((citation,), example.passages), hypothesis):
                value = w3
            else:
                rest = tuple(c for c in sentence.citations if c is not citation)
                removal_premise = concat_premise(rest, example.passages)
                value = w3 if not oracle.entails(removal_premise, hypothesis) else -w3
            rewards.append(
                CitationReward(sentence.position, idx, citation.passage_index, value)
            )
    return rewards


def score_response(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
    weights: RewardWeights = RewardWeights(),
    strict_em: bool = False,
) -> RewardBreakdown:
    """Compute the full reward breakdown of a parsed response."""
    degenerate = example.key_info.count == 0
    r1, hits = correctness_reward(parsed, example, oracle, weights.w1, strict_em)
    r2 = citation_recall_rewards(parsed, example, oracle, weights.w2)
    r3 = citation_precision_rewards(parsed, example, oracle, weights.w3)
    combined = r1 + sum(r2) + sum(r.value for r in r3)
    return RewardBreakdown(
        r1=r1,
        hits=hits,
        r2_per_sentence=tuple(r2),
        r3_per_citation=tuple(r3),
        combined=combined,
        degenerate_keys=degenerate,
    )


def combined_reward(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
    weights: RewardWeights = RewardWeights(),
    upto_sentence: int | None = None,
    strict_em: bool = False,
) -> float:
    """Combined reward of the response prefix ending at `upto_sentence`
    (default: the whole response).

    The correctness term is recomputed on the prefix as a single text (a
    key item may be matched by text spanning sentences), while recall and
    precision sum over the covered sentences and their citations.
    """
    if upto_sentence is None or upto_sentence >= parsed.sentence_count:
        target = parsed
    else:
        if upto_sentence < 1:
            raise ValueError("upto_sentence must be >= 1")
        target = response_from_sentences(
            parsed.sentences[:upto_sentence], example.dataset_mode
        )
    return score_response(target, example, oracle, weights, strict_em).combined


@dataclass(frozen=True)
class SegmentBoundaries:
    """Token positions where rewards land: the response's EOS token, each
    sentence's final token, and each citation's closing-bracket token.

    `citation_end_positions` follows the same global order as
    RewardBreakdown.r3_per_citation (sentences in order, citations in
    first-appearance order within each sentence).
    """

    eos_token_pos: int
    sentence_end_positions: tuple[int, ...]
    citation_end_positions: tuple[int, ...]


@dataclass(frozen=True)
class PolicyLogprobs:
    """Per-token log-probabilities under the current and the initial policy,
    used for the KL penalty."""

    current: tuple[float, ...]
    initial: tuple[float, ...]

    def __post_init__(self):
        if len(self.current) != len(self.initial):
            raise ValueError("current/initial logprob lengths differ")
        if any(v > 0 for v in self.current) or any(v > 0 for v in self.initial):
            raise ValueError("log-probabilities must be <= 0")


@dataclass(frozen=True)
class TokenRewardMap:
    """Per-token scalar rewards aligned to a tokenized response."""

    token_count: int
    rewards: tuple[float, ...]
    kl_applied: bool
    beta: float


def _strictly_increasing(positions: tuple[int, ...]) -> bool:
    return all(a < b for a, b in zip(positions, positions[1:]))


def _validate_common(
    token_count: int, logprobs: PolicyLogprobs | None, beta: float
) -> None:
    if token_count < 1:
        raise BoundaryMismatch("token_count must be >= 1")
    if beta > 0 and logprobs is None:
        raise ValueError("beta > 0 requires policy logprobs")
    if logprobs is not None and len(logprobs.current) != token_count:
        raise BoundaryMismatch(
            f"logprob length {len(logprobs.current)} != token_count {token_count}"
        )


def _kl_penalties(
    token_count: int, logprobs: PolicyLogprobs | None, beta: float
) -> list[float] | None:
    if beta <= 0 or logprobs is None:
        return None
    return [
        beta * (cur - init) for cur, init in zip(logprobs.current, logprobs.initial)
    ]


def fine_grained_token_map(
    breakdown: RewardBreakdown,
    bounds: SegmentBoundaries,
    token_count: int,
    logprobs: PolicyLogprobs | None = None,
    beta: float = 0.0,
) -> TokenRewardMap:
    """Place each reward on its segment's final token and subtract the KL
    penalty everywhere.

    The correctness reward lands on the EOS token, each sentence reward on
    that sentence's last token, each citation reward on its closing-bracket
    token; a position holding several rewards carries their sum. With
    beta=0 the map totals exactly the combined reward.
    """
    _validate_common(token_count, logprobs, beta)
    positions_ok = (
        0 <= bounds.eos_token_pos < token_count
        and all(0 <= p < token_count for p in bounds.sentence_end_positions)
        and all(0 <= p < token_count for p in bounds.citation_end_positions)
    )
    if not positions_ok:
        raise BoundaryMismatch("boundary position outside token range")
    if not _strictly_increasing(bounds.sentence_end_positions):
        raise BoundaryMismatch("sentence end positions must be strictly increasing")
    if not _strictly_increasing(bounds.citation_end_positions):
        raise BoundaryMismatch("citation end positions must be strictly increasing")
    if len(bounds.sentence_end_positions) != len(breakdown.r2_per_sentence):
        raise BoundaryMismatch(
            f"{len(bounds.sentence_end_positions)} sentence boundaries for "
            f"{len(breakdown.r2_per_sentence)} sentence rewards"
        )
    if len(bounds.citation_end_positions) != len(breakdown.r3_per_citation):
        raise BoundaryMismatch(
            f"{len(bounds.citation_end_positions)} citation boundaries for "
            f"{len(breakdown.r3_per_citation)} citation rewards"
        )

    rewards = [0.0] * token_count
    rewards[bounds.eos_token_pos] += breakdown.r1
    for pos, value in zip(bounds.sentence_end_positions, breakdown.r2_per_sentence):
        rewards[pos] += value
    for pos, citation in zip(bounds.citation_end_positions, breakdown.r3_per_citation):
        rewards[pos] += citation.value
    penalties = _kl_penalties(token_count, logprobs, beta)
    if penalties is not None:
        rewards = [r - p for r, p in zip(rewards, penalties)]
    return TokenRewardMap(
        token_count=token_count,
        rewards=tuple(rewards),
        kl_applied=penalties is not None,
        beta=beta,
    )


def holistic_token_map(
    breakdown: RewardBreakdown,
    token_count: int,
    logprobs: PolicyLogprobs | None = None,
    beta: float = 0.0,
) -> TokenRewardMap:
    """Place the whole combined reward on the final token; every other
    position carries only the KL penalty (zero when beta=0)."""
    _validate_common(token_count, logprobs, beta)
    rewards = [0.0] * token_count
    rewards[-1] = breakdown.combined
    penalties = _kl_penalties(token_count, logprobs, beta)
    if penalties is not None:
        rewards = [r - p for r, p in zip(rewards, penalties)]
    return TokenRewardMap(
        token_count=token_count,
        rewards=tuple(rewards),
        kl_applied=penalties is not None,
        beta=beta,
    )
