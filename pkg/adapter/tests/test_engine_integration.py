"""End-to-end: the scoring engine drives this adapter over a real socket.

Boots the service with the offline reference models, then runs the
citeward CLI against it through `--oracle remote:` / `--backend remote:`.
On a dataset whose entailments are unambiguous under the lexical judge, the
remote run must reproduce the scripted-oracle run byte for byte.
"""

import json
import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from citeward.cli import main as citeward_main

from citeward_adapter.app import create_app
from citeward_adapter.config import AdapterConfig

ROOT = Path(__file__).resolve().parent.parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="module")
def service_url():
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(
        create_app(AdapterConfig()), host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("adapter did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


# dataset crafted so the lexical judge is unambiguous: supported sentences
# repeat their passage's content words, unsupported ones share none
DATASET = [
    {
        "example_id": "it1",
        "question": "What crossed the frozen river?",
        "dataset_mode": "long_form",
        "answers": ["silver fox"],
        "docs": [
            {"title": "North Journal", "text": "the silver fox crossed the frozen river"},
            {"title": "South Journal", "text": "rain fell on the quiet valley all week"},
        ],
    },
    {
        "example_id": "it2",
        "question": "What rings at noon?",
        "dataset_mode": "long_form",
        "answers": ["brass bell"],
        "docs": [
            {"title": "Tower Notes", "text": "a brass bell rings at noon in the tower"},
            {"title": "Garden Notes", "text": "tulips bloom beside the garden wall"},
        ],
    },
]

RESPONSES = [
    {
        "example_id": "it1",
        "output": "The silver fox crossed the frozen river [1]. The golden owl stayed home [2].",
    },
    {
        "example_id": "it2",
        "output": "A brass bell rings at noon [1]. Nothing else happens.",
    },
]

# the same verdicts the lexical judge reaches, as a scripted table
SCRIPTED_ORACLE = {
    "default": False,
    "entries": [
        {
            "premise_key": "Title: North Journal. the silver fox crossed the frozen river",
            "hypothesis_key": "The silver fox crossed the frozen river.",
            "entailed": True,
        },
        {
            "premise_key": "Title: South Journal. rain fell on the quiet valley all week",
            "hypothesis_key": "The golden owl stayed home.",
            "entailed": False,
        },
        {
            "premise_key": "Title: Tower Notes. a brass bell rings at noon in the tower",
            "hypothesis_key": "A brass bell rings at noon.",
            "entailed": True,
        },
    ],
}


@pytest.fixture
def files(tmp_path):
    dataset = tmp_path / "dataset.jsonl"
    dataset.write_text("\n".join(json.dumps(r) for r in DATASET) + "\n")
    responses = tmp_path / "responses.jsonl"
    responses.write_text("\n".join(json.dumps(r) for r in RESPONSES) + "\n")
    oracle = tmp_path / "oracle.json"
    oracle.write_text(json.dumps(SCRIPTED_ORACLE))
    return dataset, responses, oracle


def test_remote_eval_matches_scripted_run(service_url, files, tmp_path):
    dataset, responses, oracle = files
    remote_out = tmp_path / "remote.jsonl"
    code = citeward_main(
        [
            "eval",
            "--dataset", str(dataset),
            "--responses", str(responses),
            "--oracle", f"remote:{service_url}",
            "--out", str(remote_out),
        ]
    )
    assert code == 0

    scripted_out = tmp_path / "scripted.jsonl"
    code = citeward_main(
        [
            "eval",
            "--dataset", str(dataset),
            "--responses", str(responses),
            "--oracle", f"scripted:{oracle}",
            "--out", str(scripted_out),
        ]
    )
    assert code == 0
    assert remote_out.read_bytes() == scripted_out.read_bytes()

    records = [json.loads(l) for l in remote_out.read_text().splitlines()]
    it1 = next(r for r in records if r.get("example_id") == "it1")
    assert it1["citation_recall"] == pytest.approx(50.0)
    assert it1["correctness_recall"] == pytest.approx(100.0)


def test_fixture_dataset_scores_without_oracle_unavailable(service_url, tmp_path, capsys):
    out = tmp_path / "fixture_eval.jsonl"
    code = citeward_main(
        [
            "eval",
            "--dataset", str(FIXTURES / "dataset10.jsonl"),
            "--responses", str(FIXTURES / "responses10.jsonl"),
            "--oracle", f"remote:{service_url}",
            "--out", str(out),
        ]
    )
    assert code == 0, capsys.readouterr().err
    lines = out.read_text().splitlines()
    assert len(lines) == 11  # 10 examples + aggregate
    assert all("OracleUnavailable" not in line for line in lines)


def test_engine_samples_through_remote_backend(service_url, files, tmp_path):
    dataset, _, _ = files
    out = tmp_path / "selected.jsonl"
    code = citeward_main(
        [
            "sample",
            "--dataset", str(dataset),
            "--backend", f"remote:{service_url}",
            "--oracle", f"remote:{service_url}",
            "--mode", "finegrained",
            "--out", str(out),
        ]
    )
    assert code == 0
    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(records) == 2
    for record in records:
        # the extractive policy cites the documents it quotes
        assert "[1]" in record["text"] or "[2]" in record["text"]

    trace_lines = (tmp_path / "selected.jsonl.trace.jsonl").read_text().splitlines()
    assert trace_lines


def test_holistic_sampling_through_remote_backend(service_url, files, tmp_path):
    dataset, _, _ = files
    out = tmp_path / "holistic.jsonl"
    code = citeward_main(
        [
            "sample",
            "--dataset", str(dataset),
            "--backend", f"remote:{service_url}",
            "--oracle", f"remote:{service_url}",
            "--mode", "holistic",
            "--out", str(out),
        ]
    )
    assert code == 0
    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(records) == 2
    assert all(r["reward"] is not None for r in records)
