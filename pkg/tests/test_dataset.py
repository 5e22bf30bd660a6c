"""Dataset and response ingestion."""

import json

import pytest

from citeward.core import DatasetMode, KeyInfoKind
from citeward.dataset import (
    example_to_record,
    load_dataset,
    load_responses,
    load_token_records,
    save_dataset,
)
from citeward.errors import EmptyDataset, IngestError

from conftest import make_example


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def good_record(i=1):
    return {
        "example_id": f"e{i}",
        "question": f"Question {i}?",
        "dataset_mode": "long_form",
        "answers": ["alpha", "beta"],
        "docs": [{"title": "t1", "text": "body1"}, {"title": "t2", "text": "body2"}],
    }


class TestLoadDataset:
    def test_well_formed_records(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_jsonl(path, [good_record(i) for i in range(10)])
        examples, report = load_dataset(path)
        assert len(examples) == 10
        assert report == []
        assert examples[0].passages[0].index == 1
        assert examples[0].key_info.kind is KeyInfoKind.EXACT_MATCH

    def test_missing_docs_excluded(self, tmp_path):
        bad = good_record(2)
        del bad["docs"]
        path = tmp_path / "data.jsonl"
        write_jsonl(path, [good_record(1), bad])
        examples, report = load_dataset(path)
        assert [e.example_id for e in examples] == ["e1"]
        assert report[0]["line"] == 2

    def test_both_answers_and_claims_excluded(self, tmp_path):
        bad = good_record(2)
        bad["claims"] = ["c1"]
        path = tmp_path / "data.jsonl"
        write_jsonl(path, [good_record(1), bad])
        examples, report = load_dataset(path)
        assert len(examples) == 1
        assert "exactly one" in report[0]["error"]

    def test_claims_records(self, tmp_path):
        record = good_record(1)
        del record["answers"]
        record["claims"] = ["the sky is blue"]
        path = tmp_path / "data.jsonl"
        write_jsonl(path, [record])
        examples, _ = load_dataset(path)
        assert examples[0].key_info.kind is KeyInfoKind.CLAIMS

    def test_list_mode_parsed(self, tmp_path):
        record = good_record(1)
        record["dataset_mode"] = "list_form"
        path = tmp_path / "data.jsonl"
        write_jsonl(path, [record])
        examples, _ = load_dataset(path)
        assert examples[0].dataset_mode is DatasetMode.LIST_FORM

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_dataset(tmp_path / "missing.jsonl")

    def test_zero_valid_records(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text("not json\n")
        with pytest.raises(EmptyDataset):
            load_dataset(path)

    def test_malformed_json_line_reported(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text(json.dumps(good_record(1)) + "\n{broken\n")
        examples, report = load_dataset(path)
        assert len(examples) == 1
        assert report[0]["line"] == 2


def test_round_trip(tmp_path):
    examples = [make_example(example_id=f"e{i}", answers=("a", "b")) for i in range(3)]
    path = tmp_path / "out.jsonl"
    save_dataset(examples, path)
    loaded, report = load_dataset(path)
    assert report == []
    assert loaded == examples
    assert [example_to_record(e) for e in loaded] == [
        example_to_record(e) for e in examples
    ]


class TestLoadResponses:
    def test_basic(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_jsonl(path, [{"example_id": "e1", "output": "text one."}])
        responses, report = load_responses(path)
        assert responses == {"e1": "text one."}
        assert report == []

    def test_duplicate_keeps_first(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_jsonl(
            path,
            [
                {"example_id": "e1", "output": "first."},
                {"example_id": "e1", "output": "second."},
            ],
        )
        responses, report = load_responses(path)
        assert responses["e1"] == "first."
        assert report[0]["error"] == "duplicate example_id"


class TestLoadTokenRecords:
    def test_required_fields(self, tmp_path):
        path = tmp_path / "tok.jsonl"
        write_jsonl(
            path,
            [
                {
                    "example_id": "e1",
                    "output": "alpha [1].",
                    "token_count": 5,
                    "eos_position": 4,
                    "sentence_end_positions": [3],
                    "citation_end_positions": [2],
                },
                {"example_id": "e2"},
            ],
        )
        records, report = load_token_records(path)
        assert len(records) == 1
        assert report[0]["line"] == 2
