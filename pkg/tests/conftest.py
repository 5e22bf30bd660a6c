"""Shared test fixtures: example builders and deterministic oracles."""

import hashlib

import pytest

from citeward.core import (
    DatasetMode,
    KeyInfoKind,
    KeyInfoList,
    Passage,
    TaskExample,
)
from citeward.oracle import EntailmentOracle, ScriptedOracle


def make_example(
    example_id="ex1",
    question="What is alpha?",
    mode=DatasetMode.LONG_FORM,
    answers=("alpha",),
    claims=None,
    passages=None,
):
    if passages is None:
        passages = [("t1", "body1"), ("t2", "body2"), ("t3", "body3")]
    if claims is not None:
        key_info = KeyInfoList(KeyInfoKind.CLAIMS, tuple(claims))
    else:
        key_info = KeyInfoList(KeyInfoKind.EXACT_MATCH, tuple(answers))
    return TaskExample(
        example_id=example_id,
        question=question,
        dataset_mode=mode,
        key_info=key_info,
        passages=tuple(
            Passage(index=i, title=t, body=b) for i, (t, b) in enumerate(passages, 1)
        ),
    )


class CountingOracle(ScriptedOracle):
    """Scripted oracle that counts backend judgments (memo misses)."""

    def __init__(self, table=None, default=False):
        super().__init__(table, default)
        self.judged = 0

    def _judge(self, premise, hypothesis):
        self.judged += 1
        return super()._judge(premise, hypothesis)


class HashOracle(EntailmentOracle):
    """Deterministic pseudo-random judge for corpus-scale property tests."""

    def __init__(self, seed=0):
        super().__init__()
        self.seed = seed

    def _judge(self, premise, hypothesis):
        blob = f"{self.seed}|{premise}|{hypothesis}".encode("utf-8")
        return hashlib.sha256(blob).digest()[0] % 2 == 0


@pytest.fixture
def example():
    return make_example()
