"""Entailment model families behind the /nli endpoint.

`lexical` is a deterministic, dependency-free reference judge for offline
runs and protocol testing: a hypothesis is entailed when all of its content
tokens appear in the premise. The hf-* families wrap real NLI checkpoints:
label-argmax for classifier heads, yes/no token comparison for
text-generating models. All families judge greedily, so fixed inputs give
fixed verdicts.
"""

from __future__ import annotations

import logging
import re
import threading
from typing import Protocol

from .config import NliConfig

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"[a-z0-9]+")

# function words ignored by the lexical judge
_STOPWORDS = frozenset(
    "a an the is are was were be been being and or of to in on at by for "
    "with as it its this that those these".split()
)


class NliModel(Protocol):
    model_id: str

    def judge(self, premise: str, hypothesis: str) -> tuple[bool, float]:
        """(entailed, score in [0, 1]); deterministic for fixed inputs."""
        ...


class LexicalEntailment:
    """Content-token containment: entailed iff every content token of the
    hypothesis occurs in the premise. Score is the covered fraction."""

    model_id = "lexical-overlap"

    def judge(self, premise: str, hypothesis: str) -> tuple[bool, float]:
        premise_tokens = set(_TOKEN.findall(premise.lower()))
        needed = [
            t for t in _TOKEN.findall(hypothesis.lower()) if t not in _STOPWORDS
        ]
        if not needed:
            return False, 0.0
        covered = sum(1 for t in needed if t in premise_tokens)
        score = covered / len(needed)
        return covered == len(needed), score


class HfClassifierNli:
    """Sequence-classification NLI checkpoint; entailment by label argmax."""

    def __init__(self, config: NliConfig):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.model_id = config.model_id
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_id)
        self.model = AutoModelForSequenceClassification.from_pretrained(config.model_id)
        self.model.to(config.device)
        self.model.eval()
        self.device = config.device
        self._lock = threading.Lock()
        id2label = {
            int(k): v.lower() for k, v in self.model.config.id2label.items()
        }
        self.entail_ids = [i for i, name in id2label.items() if "entail" in name]
        if not self.entail_ids:
            raise RuntimeError(
                f"{config.model_id}: no entailment label in {id2label}"
            )

    def judge(self, premise: str, hypothesis: str) -> tuple[bool, float]:
        inputs = self.tokenizer(
            premise, hypothesis, return_tensors="pt", truncation=True
        ).to(self.device)
        with self._lock, self._torch.no_grad():
            logits = self.model(**inputs).logits[0]
        probs = logits.softmax(-1)
        entail_prob = float(sum(probs[i] for i in self.entail_ids))
        return int(logits.argmax()) in self.entail_ids, entail_prob


class HfSeq2SeqNli:
    """Text-generating NLI checkpoint scored as premise/hypothesis to a
    binary verdict token; the yes ("1") and no ("0") continuations are
    compared directly."""

    def __init__(self, config: NliConfig):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.model_id = config.model_id
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_id)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(config.model_id)
        self.model.to(config.device)
        self.model.eval()
        self.device = config.device
        self._lock = threading.Lock()
        self.yes_id = self.tokenizer("1", add_special_tokens=False).input_ids[0]
        self.no_id = self.tokenizer("0", add_special_tokens=False).input_ids[0]

    def judge(self, premise: str, hypothesis: str) -> tuple[bool, float]:
        text = f"premise: {premise} hypothesis: {hypothesis}"
        inputs = self.tokenizer(text, return_tensors="pt", truncation=True).to(
            self.device
        )
        with self._lock, self._torch.no_grad():
            out = self.model.generate(
                **inputs,
                max_new_tokens=1,
                do_sample=False,
                output_scores=True,
                return_dict_in_generate=True,
            )
        scores = out.scores[0][0]
        pair = self._torch.stack([scores[self.no_id], scores[self.yes_id]]).softmax(-1)
        yes_prob = float(pair[1])
        return yes_prob > 0.5, yes_prob


def build_nli_model(config: NliConfig) -> NliModel:
    if config.family == "lexical":
        return LexicalEntailment()
    try:
        if config.family == "hf-classifier":
            return HfClassifierNli(config)
        return HfSeq2SeqNli(config)
    except Exception as exc:
        raise RuntimeError(f"failed to load NLI model {config.model_id}: {exc}") from exc
