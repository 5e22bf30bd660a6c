"""Prompt construction: instruction, optional in-context demonstrations,
question, numbered document lines, and the answer cue.

The two demonstrations per demo set live in packaged data files rather than
code; their document bodies are the published placeholders.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .core import DatasetMode, TaskExample

LONG_FORM_INSTRUCTION = (
    "Write an accurate, engaging, and concise answer for the given question "
    "using only the provided search results (some of which might be "
    "irrelevant) and cite them properly. Use an unbiased and journalistic "
    "tone. Always cite for any factual claim. When citing several search "
    "results, use [1][2][3]. Cite at least one document and at most three "
    "documents in each sentence. If multiple documents support the sentence, "
    "only cite a minimum sufficient subset of the documents."
)

LIST_FORM_INSTRUCTION = (
    "Provide a list of accurate answers for the given question using only "
    "the provided search results (some of which might be irrelevant) and "
    "cite them properly. Always cite one and only one document for each "
    "answer. Separate answers by commas. For questions that have more than "
    "5 answers, write at least 5 answers."
)

_DEFAULT_DEMO_SET = {
    DatasetMode.LONG_FORM: "asqa",
    DatasetMode.LIST_FORM: "qampari",
}


@lru_cache(maxsize=None)
def load_demonstrations(demo_set: str) -> tuple[dict, ...]:
    """Load the two fixed demonstrations of a named demo set ("asqa",
    "qampari", or "eli5")."""
    path = resources.files("citeward.data").joinpath(f"demos_{demo_set}.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    return tuple(payload["demonstrations"])


def render_document_line(index: int, title: str, body: str) -> str:
    return f"Document [{index}](Title: {title}): {body}"


def _qa_block(question: str, documents: list[tuple[str, str]], answer: str) -> str:
    doc_lines = "\n".join(
        render_document_line(i, title, body)
        for i, (title, body) in enumerate(documents, start=1)
    )
    return f"Question: {question}\n\n{doc_lines}\n\nAnswer:{answer}"


def build_prompt(
    example: TaskExample,
    include_demos: bool = False,
    demo_set: str | None = None,
) -> str:
    """Render the full prompt for an example; a pure function of its inputs.

    With include_demos, the two fixed demonstrations of the demo set
    (default: asqa for long-form, qampari for list-form) are inserted
    between the instruction and the question.
    """
    instruction = (
        LIST_FORM_INSTRUCTION
        if example.dataset_mode is DatasetMode.LIST_FORM
        else LONG_FORM_INSTRUCTION
    )
    blocks = [f"Instruction: {instruction}"]
    if include_demos:
        name = demo_set or _DEFAULT_DEMO_SET[example.dataset_mode]
        for demo in load_demonstrations(name):
            blocks.append(
                _qa_block(
                    demo["question"],
                    [(d["title"], d["text"]) for d in demo["documents"]],
                    demo["answer"],
                )
            )
    blocks.append(
        _qa_block(
            example.question,
            [(p.title, p.body) for p in example.passages],
            "",
        )
    )
    return "\n\n".join(blocks)
