#!/usr/bin/env python3
"""Regenerate the shipped fixture files and golden outputs.

Each fixture example declares, per sentence hypothesis, which citation
subsets entail it; claims-mode verdicts use a containment rule. A recording
oracle replays those verdicts while capturing every (premise, hypothesis)
pair the engine actually asks about, so the emitted scripted-oracle table
is complete by construction. Hand-computed rewards are asserted here so a
bad fixture fails to build instead of freezing wrong goldens.

Usage: python tools/build_fixtures.py [--check]
"""

from __future__ import annotations

import argparse
import json
import math
import re
import subprocess
import sys
from pathlib import Path

from citeward.core import DatasetMode, RewardWeights
from citeward.dataset import load_dataset
from citeward.metrics import evaluate_example
from citeward.oracle import EntailmentOracle, fold_key, render_passage
from citeward.rewards import score_response
from citeward.sampler import Candidate, SamplerConfig, ScriptedBackend, fine_grained_beam_search, holistic_rs
from citeward.segment import parse_response

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = FIXTURES / "golden"

W = RewardWeights()

# Per-example fixture spec. "truth" maps a sentence hypothesis to the set of
# citation-index tuples that entail it (anything unlisted is not entailing).
# Tuples use passage indices in first-appearance order. "tree" is the
# scripted candidate table for the sample command, keyed by prefix.
EXAMPLES = [
    {
        "example_id": "e01",
        "mode": "long_form",
        "question": "Which firms anchored the dover exchange?",
        "answers": ["alpha corp", "beta inc", "gamma llc"],
        "docs": [
            ("Alpha Corp", "alpha corp was founded in 1901 in dover"),
            ("Beta Inc", "beta inc opened its doors in 1950"),
            ("Gamma LLC", "gamma llc is the newest of the three"),
        ],
        "response": "The first was alpha corp [1]. Later came beta inc [3]. Nothing else matters.",
        "truth": {
            "The first was alpha corp.": {(1,): True},
            "Later came beta inc.": {(3,): False, (2,): True},
            "Maybe gamma llc.": {(3,): True},
            "And then beta inc arrived.": {},
            "beta inc followed.": {(2,): True},
        },
        "tree": {
            "": ["The first was alpha corp [1].", "Maybe gamma llc [3]."],
            "The first was alpha corp [1].": [
                "Later came beta inc [2].",
                "And then beta inc arrived.",
            ],
            "Maybe gamma llc [3].": ["beta inc followed [2]."],
        },
        "expect_combined": 0.0,
        "expect_beam": ("The first was alpha corp [1]. Later came beta inc [2].", 1.0),
    },
    {
        "example_id": "e02",
        "mode": "long_form",
        "question": "How many households did the 1950 riverton census count?",
        "answers": ["451,225"],
        "docs": [
            ("Census 1950", "the 1950 census counted 451,225 households in riverton"),
            ("River Park", "the city park opened beside the river"),
            ("Town Notes", "riverton grew quickly after the war"),
        ],
        "response": (
            "Riverton held a census in 1950. "
            "Many households were counted. "
            "The park bulletin reported the total [2]."
        ),
        "truth": {
            "Riverton held a census in 1950.": {},
            "Many households were counted.": {},
            "The park bulletin reported the total.": {(2,): False},
            "The census counted 451,225 households [1].": {},
            "The census counted 451,225 households.": {(1,): True},
            "The park was nice.": {(2,): True},
        },
        "tree": {
            "": ["The census counted 451,225 households [1].", "The park was nice [2]."],
        },
        "expect_combined": -1.0,
        "expect_beam": ("The census counted 451,225 households [1].", 0.6),
    },
    {
        "example_id": "e03",
        "mode": "long_form",
        "question": "What do records say about the stone bridge?",
        "claims": [
            "the bridge opened in 1950",
            "the bridge span measures three hundred meters",
        ],
        "docs": [
            ("Bridge History", "the stone bridge opened in 1950 after two years of work"),
            ("Engineering", "the bridge span measures three hundred meters"),
        ],
        "response": "Records show the bridge opened in 1950 [1]. Its famous arch was painted red [9].",
        "truth": {
            "Records show the bridge opened in 1950.": {(1,): True},
            "Its famous arch was painted red.": {},
            "The bridge opened in 1950.": {(1,): True},
            "A red arch tops it.": {(2,): False},
        },
        "tree": {
            "": ["The bridge opened in 1950 [1].", "A red arch tops it [2]."],
        },
        "expect_combined": 0.0,
        "expect_beam": ("The bridge opened in 1950 [1].", 0.4),
    },
    {
        "example_id": "e04",
        "mode": "long_form",
        "question": "How many homes does the quartz lake solar farm power?",
        "answers": ["nine thousand homes"],
        "docs": [
            ("Solar Atlas", "the solar farm near quartz lake powers nine thousand homes"),
            ("Energy Review", "quartz lake hosts a solar farm"),
            ("Seasons", "weather patterns shift in autumn"),
        ],
        "response": "The solar farm powers nine thousand homes [1][2].",
        "truth": {
            "The solar farm powers nine thousand homes.": {
                (1, 2): True,
                (1,): True,
                (2,): False,
            },
        },
        "tree": {
            "": [
                "The solar farm powers nine thousand homes [1].",
                "The solar farm powers nine thousand homes [1][2].",
            ],
        },
        "expect_combined": 0.4,
        "expect_beam": ("The solar farm powers nine thousand homes [1].", 0.6),
    },
    {
        "example_id": "e05",
        "mode": "long_form",
        "question": "What do the two trails form?",
        "answers": ["coast loop"],
        "docs": [
            ("Trail West", "the west trail climbs to the ridge"),
            ("Trail East", "the east trail descends to the shore"),
            ("Trail Guide", "both trails form the coast loop together"),
        ],
        "response": "Together they form the coast loop [1][2].",
        "truth": {
            "Together they form the coast loop.": {
                (1, 2): True,
                (1,): False,
                (2,): False,
                (3,): True,
            },
        },
        "tree": {
            "": [
                "Together they form the coast loop [1][2].",
                "Together they form the coast loop [3].",
            ],
        },
        "expect_combined": 0.8,
        "expect_beam": ("Together they form the coast loop [1][2].", 0.8),
    },
    {
        "example_id": "e06",
        "mode": "long_form",
        "question": "What sits on the hilltop?",
        "answers": ["hilltop observatory", "brass telescope"],
        "docs": [
            ("Observatory", "the hilltop observatory opened in 1901"),
            ("Astronomy News", "the observatory hosts a brass telescope"),
        ],
        "response": "The hilltop observatory opened long ago [1]. It hosts a brass telescope [2].",
        "truth": {
            "The hilltop observatory opened long ago.": {(1,): True},
            "It hosts a brass telescope.": {(2,): True},
            "A dome crowns the hill.": {},
        },
        "tree": {
            "": ["The hilltop observatory opened long ago [1].", "A dome crowns the hill."],
            "The hilltop observatory opened long ago [1].": [
                "It hosts a brass telescope [2]."
            ],
        },
        "expect_combined": 1.2,
        "expect_beam": (
            "The hilltop observatory opened long ago [1]. It hosts a brass telescope [2].",
            1.2,
        ),
    },
    {
        "example_id": "e07",
        "mode": "list_form",
        "question": "Which gardens did the guild plant?",
        "answers": ["aster", "briar", "cedar", "dahlia", "elm", "fern", "garnet"],
        "docs": [
            ("Guild North", "the guild planted aster briar and cedar gardens in the north"),
            ("Guild South", "the guild planted dahlia elm and fern gardens in the south"),
        ],
        "response": "aster [1], briar [1], cedar [1], dahlia [2], elm [2], fern [2]",
        "truth": {
            "Which gardens did the guild plant? aster": {(1,): True},
            "Which gardens did the guild plant? briar": {(1,): True},
            "Which gardens did the guild plant? cedar": {(1,): True},
            "Which gardens did the guild plant? dahlia": {(2,): True},
            "Which gardens did the guild plant? elm": {(2,): True},
            "Which gardens did the guild plant? fern": {(2,): True},
            "Which gardens did the guild plant? garnet": {(2,): False},
        },
        "tree": {
            "": ["aster [1]", "garnet [2]"],
            "aster [1]": ["briar [1]"],
        },
        "expect_combined": 3.6,
        "expect_beam": ("aster [1], briar [1]", 0.6),
    },
    {
        "example_id": "e08",
        "mode": "list_form",
        "question": "Which ships sailed the northern route?",
        "answers": ["kestrel", "osprey", "petrel", "albatross"],
        "docs": [
            ("Harbor Log", "the kestrel and the osprey sailed north from the harbor"),
            ("Route Notes", "the petrel joined the northern route later"),
        ],
        "response": "kestrel [1], osprey [1], petrel [2], gull [1], tern [2]",
        "truth": {
            "Which ships sailed the northern route? kestrel": {(1,): True},
            "Which ships sailed the northern route? osprey": {(1,): True},
            "Which ships sailed the northern route? petrel": {(2,): True},
            "Which ships sailed the northern route? gull": {(1,): False},
            "Which ships sailed the northern route? tern": {(2,): False},
        },
        "tree": {
            "": ["kestrel [1]", "gull [1]"],
            "kestrel [1]": ["osprey [1]"],
        },
        "expect_combined": 0.8,
        "expect_beam": ("kestrel [1], osprey [1]", 0.8),
    },
    {
        "example_id": "e09",
        "mode": "list_form",
        "question": "Which stations ring the old line?",
        "answers": [f"k{i:02d}" for i in range(1, 13)],
        "docs": [
            ("Line Map", "stations k01 k02 k03 k04 and k05 ring the old line"),
            ("Depot Notes", "the depot lists twelve stations in the ledger"),
        ],
        "response": "k01 [1], k02 [1], k03 [1], k04 [1], k05 [1]",
        "truth": {
            **{
                f"Which stations ring the old line? k{i:02d}": {(1,): True}
                for i in range(1, 6)
            },
            "Which stations ring the old line? k09": {(2,): False},
        },
        "tree": {
            "": ["k01 [1]", "k09 [2]"],
            "k01 [1]": ["k02 [1]"],
        },
        "expect_combined": 3.0,
        "expect_beam": ("k01 [1], k02 [1]", 0.6),
    },
    {
        "example_id": "e10",
        "mode": "long_form",
        "question": "What does the meadow survey report?",
        "answers": ["3.14 square miles", "poppies"],
        "docs": [
            ("Meadow Survey", "the meadow spans 3.14 square miles of grass"),
            ("Field Notes", "wildflowers i.e. poppies bloom in the meadow"),
        ],
        "response": (
            "The meadow spans 3.14 square miles [1][1]. "
            "Wildflowers i.e. poppies bloom there [2][7]."
        ),
        "truth": {
            "The meadow spans 3.14 square miles.": {(1,): True},
            "Wildflowers i.e. poppies bloom there.": {(2,): True},
            "Grass waves in wind.": {},
        },
        "tree": {
            "": ["The meadow spans 3.14 square miles [1].", "Grass waves in wind."],
        },
        "expect_combined": 1.0,
        "expect_beam": ("The meadow spans 3.14 square miles [1].", 0.4),
    },
]


class RecordingOracle(EntailmentOracle):
    """Replays declared verdicts and records every queried pair."""

    def __init__(self, spec, example):
        super().__init__()
        self.spec = spec
        self.example = example
        self.recorded: dict[tuple[str, str], bool] = {}
        # rendered premise -> subset tuple, for every subset of each
        # sentence's citation set the engine can ask about
        self.premise_subsets: dict[str, tuple[int, ...]] = {}
        for hyp, subsets in spec["truth"].items():
            for subset in subsets:
                rendered = " ".join(
                    render_passage(example.passages[i - 1]) for i in subset
                )
                self.premise_subsets[fold_key(rendered)] = subset

    def _verdict(self, premise, hypothesis):
        claims = self.spec.get("claims")
        if claims:
            for claim in claims:
                if fold_key(hypothesis) == fold_key(claim):
                    return fold_key(claim) in fold_key(premise)
        truth = self.spec["truth"].get(hypothesis)
        if truth is None:
            raise AssertionError(
                f"{self.spec['example_id']}: no truth for hypothesis {hypothesis!r}"
            )
        subset = self.premise_subsets.get(fold_key(premise))
        if subset is None:
            raise AssertionError(
                f"{self.spec['example_id']}: unmapped premise for {hypothesis!r}: {premise!r}"
            )
        return truth.get(subset, False)

    def _judge(self, premise, hypothesis):
        verdict = self._verdict(premise, hypothesis)
        self.recorded[(premise, hypothesis)] = verdict
        return verdict


def dataset_record(spec):
    record = {
        "example_id": spec["example_id"],
        "question": spec["question"],
        "dataset_mode": spec["mode"],
        "docs": [{"title": t, "text": b} for t, b in spec["docs"]],
    }
    if "claims" in spec:
        record["claims"] = spec["claims"]
    else:
        record["answers"] = spec["answers"]
    return record


def scripted_tree(spec):
    return {
        prefix: [Candidate(text, False) for text in candidates]
        for prefix, candidates in spec["tree"].items()
    }


CITATION_TOKEN = re.compile(r"\[\d+\]")


def tokenize_sentence(raw):
    """Citation brackets become standalone tokens; everything else splits on
    whitespace."""
    tokens = []
    pos = 0
    for m in CITATION_TOKEN.finditer(raw):
        tokens.extend(raw[pos : m.start()].split())
        tokens.append(m.group(0))
        pos = m.end()
    tokens.extend(raw[pos:].split())
    return tokens


def token_record(spec, example):
    parsed = parse_response(spec["response"], example)
    list_form = example.dataset_mode is DatasetMode.LIST_FORM
    sentence_ends = []
    citation_ends = []
    offset = 0
    for i, sentence in enumerate(parsed.sentences):
        tokens = tokenize_sentence(sentence.raw_text)
        for ref in sentence.citations:
            token = f"[{ref.passage_index}]"
            citation_ends.append(offset + tokens.index(token))
        offset += len(tokens)
        sentence_ends.append(offset - 1)
        if list_form and i + 1 < len(parsed.sentences):
            offset += 1  # separator comma token
    token_count = offset + 1  # trailing EOS token
    return {
        "example_id": spec["example_id"],
        "output": spec["response"],
        "token_count": token_count,
        "eos_position": token_count - 1,
        "sentence_end_positions": sentence_ends,
        "citation_end_positions": citation_ends,
        "current_logprobs": None,
        "initial_logprobs": None,
    }


def build(check_only=False):
    FIXTURES.mkdir(exist_ok=True)
    GOLDEN.mkdir(exist_ok=True)

    dataset_lines = [json.dumps(dataset_record(s), sort_keys=True) for s in EXAMPLES]
    response_lines = [
        json.dumps({"example_id": s["example_id"], "output": s["response"]}, sort_keys=True)
        for s in EXAMPLES
    ]
    (FIXTURES / "dataset10.jsonl").write_text("\n".join(dataset_lines) + "\n")
    (FIXTURES / "responses10.jsonl").write_text("\n".join(response_lines) + "\n")

    examples, report = load_dataset(FIXTURES / "dataset10.jsonl")
    assert not report, report
    by_id = {e.example_id: e for e in examples}

    oracle_entries: dict[tuple[str, str], bool] = {}
    backend_entries = []
    token_lines = []
    for spec in EXAMPLES:
        example = by_id[spec["example_id"]]
        oracle = RecordingOracle(spec, example)
        parsed = parse_response(spec["response"], example)

        breakdown = score_response(parsed, example, oracle, W)
        assert math.isclose(breakdown.combined, spec["expect_combined"], abs_tol=1e-9), (
            spec["example_id"],
            breakdown.combined,
            spec["expect_combined"],
        )
        evaluate_example(parsed, example, oracle)

        backend = ScriptedBackend(scripted_tree(spec))
        result = fine_grained_beam_search(
            example, backend, oracle, W, SamplerConfig()
        )
        expect_text, expect_reward = spec["expect_beam"]
        assert result.best_text == expect_text, (spec["example_id"], result.best_text)
        assert math.isclose(result.best_reward, expect_reward, abs_tol=1e-9), (
            spec["example_id"],
            result.best_reward,
        )
        holistic_rs(
            example, ScriptedBackend(scripted_tree(spec)), oracle, W, SamplerConfig()
        )

        for (premise, hypothesis), verdict in oracle.recorded.items():
            key = (fold_key(premise), fold_key(hypothesis))
            if key in oracle_entries:
                assert oracle_entries[key] == verdict
            else:
                oracle_entries[key] = verdict
        for prefix, candidates in spec["tree"].items():
            backend_entries.append(
                {
                    "example_id": spec["example_id"],
                    "prefix": prefix,
                    "candidates": [{"text": c, "finished": False} for c in candidates],
                }
            )
        token_lines.append(json.dumps(token_record(spec, example), sort_keys=True))

    oracle_payload = {
        "default": False,
        "entries": [
            {"premise_key": p, "hypothesis_key": h, "entailed": v}
            for (p, h), v in sorted(oracle_entries.items())
        ],
    }
    (FIXTURES / "oracle10.json").write_text(
        json.dumps(oracle_payload, indent=1, sort_keys=True) + "\n"
    )
    (FIXTURES / "backend10.json").write_text(
        json.dumps({"entries": backend_entries}, indent=1, sort_keys=True) + "\n"
    )
    (FIXTURES / "tokens10.jsonl").write_text("\n".join(token_lines) + "\n")

    nocredit = EXAMPLES[1]
    (FIXTURES / "nocredit_dataset.jsonl").write_text(
        json.dumps(dataset_record(nocredit), sort_keys=True) + "\n"
    )
    (FIXTURES / "nocredit_responses.jsonl").write_text(
        json.dumps(
            {"example_id": nocredit["example_id"], "output": nocredit["response"]},
            sort_keys=True,
        )
        + "\n"
    )
    (FIXTURES / "nocredit_oracle.json").write_text(
        json.dumps({"default": False, "entries": []}, sort_keys=True) + "\n"
    )

    # golden outputs come from the CLI itself
    env_beta0 = {"CITEWARD_BETA": "0"}
    runs = [
        (
            ["eval", "--dataset", "fixtures/dataset10.jsonl", "--responses",
             "fixtures/responses10.jsonl", "--oracle", "scripted:fixtures/oracle10.json",
             "--out", "fixtures/golden/eval10.jsonl"],
            {},
        ),
        (
            ["sample", "--dataset", "fixtures/dataset10.jsonl", "--backend",
             "scripted:fixtures/backend10.json", "--oracle", "scripted:fixtures/oracle10.json",
             "--mode", "finegrained", "--out", "fixtures/golden/sample10.jsonl"],
            {},
        ),
        (
            ["rewardmap", "--dataset", "fixtures/dataset10.jsonl", "--responses",
             "fixtures/tokens10.jsonl", "--oracle", "scripted:fixtures/oracle10.json",
             "--mode", "finegrained", "--out", "fixtures/golden/rewardmap10.jsonl"],
            env_beta0,
        ),
    ]
    import os

    for argv, extra_env in runs:
        env = dict(os.environ, **extra_env)
        proc = subprocess.run(
            [sys.executable, "-m", "citeward.cli", *argv],
            cwd=ROOT,
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stdout + proc.stderr)
            raise SystemExit(f"golden run failed: {argv}")
    print("fixtures and goldens written")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--check", action="store_true")
    build(check_only=parser.parse_args().check)
