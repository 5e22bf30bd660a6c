"""Dataset and response ingestion: one JSON record per line.

A dataset record carries exactly one of `answers` (exact-match keys) or
`claims` (entailment-checked keys), plus ordered `docs` that become 1-based
passages. Malformed lines never abort a load; they are collected into an
error report alongside the valid examples.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .core import (
    DatasetMode,
    KeyInfoKind,
    KeyInfoList,
    Passage,
    TaskExample,
    validate_example,
)
from .errors import EmptyDataset, IngestError

logger = logging.getLogger(__name__)


def _example_from_record(record: dict) -> TaskExample:
    for field in ("example_id", "question", "dataset_mode", "docs"):
        if field not in record:
            raise ValueError(f"missing field {field!r}")
    has_answers = "answers" in record
    has_claims = "claims" in record
    if has_answers == has_claims:
        raise ValueError("record must carry exactly one of 'answers' or 'claims'")
    try:
        mode = DatasetMode(record["dataset_mode"])
    except ValueError:
        raise ValueError(f"unknown dataset_mode {record['dataset_mode']!r}") from None
    if has_answers:
        key_info = KeyInfoList(KeyInfoKind.EXACT_MATCH, tuple(str(a) for a in record["answers"]))
    else:
        key_info = KeyInfoList(KeyInfoKind.CLAIMS, tuple(str(c) for c in record["claims"]))
    docs = record["docs"]
    if not isinstance(docs, list) or not docs:
        raise ValueError("docs must be a non-empty list")
    passages = tuple(
        Passage(index=i, title=str(d.get("title", "")), body=str(d["text"]))
        for i, d in enumerate(docs, start=1)
    )
    return TaskExample(
        example_id=str(record["example_id"]),
        question=str(record["question"]),
        dataset_mode=mode,
        key_info=key_info,
        passages=passages,
    )


def load_dataset(path: str | Path) -> tuple[list[TaskExample], list[dict]]:
    """Load a JSONL dataset, returning (valid examples, error report).

    Raises IngestError when the file is unreadable and EmptyDataset when no
    line survives validation.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read dataset {path}: {exc}") from exc

    examples: list[TaskExample] = []
    report: list[dict] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            example = _example_from_record(record)
        except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
            report.append({"line": lineno, "error": str(exc)})
            continue
        validation = validate_example(example)
        if not validation.ok:
            report.append(
                {
                    "line": lineno,
                    "example_id": example.example_id,
                    "error": "; ".join(validation.violations),
                }
            )
            continue
        examples.append(example)
    if not examples:
        raise EmptyDataset(f"no valid examples in {path}")
    if report:
        logger.warning("%d malformed record(s) in %s", len(report), path)
    return examples, report


def example_to_record(example: TaskExample) -> dict:
    record: dict = {
        "example_id": example.example_id,
        "question": example.question,
        "dataset_mode": example.dataset_mode.value,
        "docs": [{"title": p.title, "text": p.body} for p in example.passages],
    }
    if example.key_info.kind is KeyInfoKind.EXACT_MATCH:
        record["answers"] = list(example.key_info.items)
    else:
        record["claims"] = list(example.key_info.items)
    return record


def save_dataset(examples: list[TaskExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example_to_record(example), sort_keys=True) + "\n")


def load_responses(path: str | Path) -> tuple[dict[str, str], list[dict]]:
    """Load response records {example_id, output}; first record wins on a
    duplicated id (reported)."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read responses {path}: {exc}") from exc
    responses: dict[str, str] = {}
    report: list[dict] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            example_id = str(record["example_id"])
            output = str(record["output"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            report.append({"line": lineno, "error": str(exc)})
            continue
        if example_id in responses:
            report.append({"line": lineno, "example_id": example_id, "error": "duplicate example_id"})
            continue
        responses[example_id] = output
    return responses, report


def load_token_records(path: str | Path) -> tuple[list[dict], list[dict]]:
    """Load tokenized-response records for reward-map emission.

    Each record: {example_id, output, token_count, eos_position,
    sentence_end_positions, citation_end_positions, current_logprobs?,
    initial_logprobs?}.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read token records {path}: {exc}") from exc
    records: list[dict] = []
    report: list[dict] = []
    required = (
        "example_id",
        "output",
        "token_count",
        "eos_position",
        "sentence_end_positions",
        "citation_end_positions",
    )
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            for field in required:
                if field not in record:
                    raise ValueError(f"missing field {field!r}")
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            report.append({"line": lineno, "error": str(exc)})
            continue
        records.append(record)
    return records, report
