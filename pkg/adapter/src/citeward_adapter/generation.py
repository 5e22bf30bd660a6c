"""Generation model families behind the /generate endpoint.

`extractive` is the deterministic offline reference: it reads the numbered
document lines out of the prompt and answers by citing document sentences
in order, which gives the engine real text with real citations to score.
`hf-causal` wraps a causal LM with sampling; sentence stopping is a stop
condition on terminator punctuation plus a post-hoc trim, since services
differ in stop-token semantics.
"""

from __future__ import annotations

import logging
import re
import threading
from dataclasses import dataclass
from typing import Protocol

from .config import GenerationConfig

logger = logging.getLogger(__name__)

_DOC_LINE = re.compile(r"^Document \[(\d+)\]\(Title: (.*?)\): (.*)$", re.MULTILINE)
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")
_LIST_PROMPT_MARKER = "Provide a list of accurate answers"


@dataclass(frozen=True)
class GeneratedCandidate:
    text: str
    finished: bool
    token_logprobs: list[float] | None = None


class GenerationModel(Protocol):
    model_id: str

    def generate(
        self,
        prompt: str,
        prefix: str,
        n: int,
        stop_at_sentence: bool,
        max_tokens: int,
        temperature: float,
    ) -> list[GeneratedCandidate]: ...


def _cap_words(text: str, max_tokens: int) -> str:
    words = text.split()
    if len(words) <= max_tokens:
        return text
    return " ".join(words[:max_tokens])


def first_sentence(text: str) -> str:
    m = _SENTENCE_END.search(text)
    return text[: m.end()] if m else text


class ExtractiveGenerator:
    """Deterministic reference policy: candidate k continues the answer with
    a sentence lifted from the next unused document, cited accordingly.

    Long-form prompts get prose sentences ("<doc sentence> [i]."); list
    prompts get short items ("<doc head> [i]"). A candidate is finished once
    every document has been used.
    """

    model_id = "extractive-reference"

    def generate(self, prompt, prefix, n, stop_at_sentence, max_tokens, temperature):
        docs = _DOC_LINE.findall(prompt)
        if not docs:
            return []
        list_form = _LIST_PROMPT_MARKER in prompt
        used = len(re.findall(r"\[\d+\]", prefix))
        candidates = []
        for k in range(n):
            doc_pos = used + k
            if doc_pos >= len(docs):
                break
            index, _title, body = docs[doc_pos]
            if list_form:
                head = " ".join(body.split()[:3])
                text = f"{head} [{index}]"
            else:
                sentence = first_sentence(body).rstrip(".!? ")
                text = f"{sentence} [{index}]."
            text = _cap_words(text, max_tokens)
            finished = doc_pos + 1 >= len(docs)
            if not stop_at_sentence and not list_form:
                # full answers take one sentence per remaining document
                rest = []
                for j in range(doc_pos + 1, len(docs)):
                    idx2, _t2, body2 = docs[j]
                    rest.append(f"{first_sentence(body2).rstrip('.!? ')} [{idx2}].")
                text = _cap_words(" ".join([text] + rest), max_tokens)
                finished = True
            candidates.append(GeneratedCandidate(text=text, finished=finished))
        return candidates


class HfCausalGenerator:
    """Sampling wrapper around a causal LM checkpoint."""

    def __init__(self, config: GenerationConfig):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self.model_id = config.model_id
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_id)
        if self.tokenizer.pad_token_id is None:
            self.tokenizer.pad_token = self.tokenizer.eos_token
        self.model = AutoModelForCausalLM.from_pretrained(config.model_id)
        self.model.to(config.device)
        self.model.eval()
        self.device = config.device
        self.top_k = config.top_k
        self.max_batch = config.max_batch
        self._lock = threading.Lock()

    def generate(self, prompt, prefix, n, stop_at_sentence, max_tokens, temperature):
        text = prompt + prefix
        inputs = self.tokenizer(text, return_tensors="pt", truncation=True).to(
            self.device
        )
        candidates = []
        with self._lock, self._torch.no_grad():
            for start in range(0, n, self.max_batch):
                batch = min(self.max_batch, n - start)
                out = self.model.generate(
                    **inputs,
                    do_sample=temperature > 0,
                    temperature=max(temperature, 1e-5),
                    top_k=self.top_k,
                    max_new_tokens=max_tokens,
                    num_return_sequences=batch,
                    output_scores=True,
                    return_dict_in_generate=True,
                    pad_token_id=self.tokenizer.pad_token_id,
                )
                prompt_len = inputs["input_ids"].shape[1]
                for seq_idx in range(out.sequences.shape[0]):
                    token_ids = out.sequences[seq_idx][prompt_len:]
                    decoded = self.tokenizer.decode(token_ids, skip_special_tokens=True)
                    finished = bool(
                        (token_ids == self.tokenizer.eos_token_id).any()
                    )
                    logprobs = []
                    for step, step_scores in enumerate(out.scores):
                        if step >= len(token_ids):
                            break
                        step_logprobs = step_scores[seq_idx].log_softmax(-1)
                        logprobs.append(float(step_logprobs[token_ids[step]]))
                    if stop_at_sentence:
                        trimmed = first_sentence(decoded.strip())
                        finished = finished and trimmed == decoded.strip()
                        decoded = trimmed
                        logprobs = logprobs[: max(len(decoded.split()), 1)]
                    candidates.append(
                        GeneratedCandidate(
                            text=decoded.strip(),
                            finished=finished,
                            token_logprobs=logprobs or None,
                        )
                    )
        return candidates[:n]


def build_generation_model(config: GenerationConfig) -> GenerationModel:
    if config.family == "extractive":
        return ExtractiveGenerator()
    try:
        return HfCausalGenerator(config)
    except Exception as exc:
        raise RuntimeError(
            f"failed to load generation model {config.model_id}: {exc}"
        ) from exc
