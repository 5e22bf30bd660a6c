"""Command-line entry points tying the engine to files on disk.

Subcommands: `eval` (dataset + responses -> metric report), `score` (print
reward breakdowns), `sample` (holistic or fine-grained reward-guided
selection), `rewardmap` (tokenized responses -> per-token reward records).
Every run writes a manifest next to its output with the config snapshot and
input digests. All file formats are documented bit-exactly in SCHEMAS.md.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import RunConfig, load_config
from .core import TaskExample
from .dataset import load_dataset, load_responses, load_token_records
from .errors import (
    BoundaryMismatch,
    CitewardError,
    EmptyResponse,
    OracleUnavailable,
)
from .metrics import aggregate_reports, evaluate_example
from .oracle import EntailmentOracle, RemoteOracle, ScriptedOracle
from .prompts import build_prompt
from .rewards import (
    PolicyLogprobs,
    SegmentBoundaries,
    fine_grained_token_map,
    holistic_token_map,
    score_response,
)
from .sampler import (
    RemoteBackend,
    ScriptedBackendSet,
    fine_grained_beam_search,
    holistic_rs,
)
from .segment import parse_response

logger = logging.getLogger(__name__)

MODE_CHOICES = ("holistic", "finegrained")
PLACEMENT_BY_MODE = {"holistic": "holistic", "finegrained": "fine_grained"}


def _dumps(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def _round2(value):
    if isinstance(value, float):
        return round(value, 2)
    if isinstance(value, dict):
        return {k: _round2(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round2(v) for v in value]
    return value


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _spec_split(spec: str, flag: str) -> tuple[str, str]:
    kind, _, target = spec.partition(":")
    if kind not in {"scripted", "remote"} or not target:
        raise ValueError(f"{flag} must look like scripted:<path> or remote:<url>, got {spec!r}")
    return kind, target


def _service_endpoint(url: str, suffix: str) -> str:
    base = url.rstrip("/")
    return base if base.endswith(suffix) else base + suffix


def build_oracle(args, config: RunConfig) -> EntailmentOracle:
    if args.oracle:
        kind, target = _spec_split(args.oracle, "--oracle")
    elif config.backend.oracle_path:
        kind, target = "scripted", config.backend.oracle_path
    elif config.backend.nli_url:
        kind, target = "remote", config.backend.nli_url
    else:
        raise ValueError("no oracle configured; pass --oracle or set backend.oracle_path/nli_url")
    if kind == "scripted":
        return ScriptedOracle.from_file(target)
    return RemoteOracle(
        _service_endpoint(target, "/nli"),
        timeout=config.backend.timeout,
        max_premise_chars=config.backend.max_premise_chars,
        max_attempts=config.backend.max_attempts,
        max_in_flight=config.backend.max_in_flight,
    )


def build_backend(args, config: RunConfig):
    """Returns (scripted_set, remote_backend); exactly one is non-None."""
    if args.backend:
        kind, target = _spec_split(args.backend, "--backend")
    elif config.backend.backend_path:
        kind, target = "scripted", config.backend.backend_path
    elif config.backend.generate_url:
        kind, target = "remote", config.backend.generate_url
    else:
        raise ValueError("no backend configured; pass --backend or set backend.backend_path/generate_url")
    if kind == "scripted":
        return ScriptedBackendSet.from_file(target), None
    remote = RemoteBackend(
        _service_endpoint(target, "/generate"),
        timeout=config.backend.timeout,
        max_attempts=config.backend.max_attempts,
    )
    return None, remote


def write_manifest(out_path: str, command: str, config: RunConfig, args, outputs: list[str]) -> None:
    inputs = {}
    for flag in ("dataset", "responses", "config"):
        value = getattr(args, flag, None)
        if value:
            inputs[flag] = _sha256(value)
    for flag in ("oracle", "backend"):
        spec = getattr(args, flag, None)
        if spec and spec.startswith("scripted:"):
            inputs[flag] = _sha256(spec.partition(":")[2])
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "inputs": inputs,
        "outputs": [Path(p).name for p in outputs],
        "seed": getattr(args, "seed", None),
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        fh.write(_dumps(manifest) + "\n")


def cmd_eval(args, config: RunConfig) -> int:
    examples, ingest_errors = load_dataset(args.dataset)
    responses, response_errors = load_responses(args.responses)
    oracle = build_oracle(args, config)

    def _one(example: TaskExample):
        if example.example_id not in responses:
            return {"example_id": example.example_id, "skipped": "no response"}, None
        try:
            parsed = parse_response(responses[example.example_id], example)
            report = evaluate_example(
                parsed,
                example,
                oracle,
                strict_em=config.strict_em,
                calibrate=config.calibration,
            )
            return report.to_record(), report
        except EmptyResponse:
            return {"example_id": example.example_id, "error": "empty response"}, None
        except OracleUnavailable as exc:
            # aborts scoring for this example only; never a silent default
            return {
                "example_id": example.example_id,
                "error": f"oracle unavailable: {exc}",
            }, None

    with ThreadPoolExecutor(max_workers=max(config.workers, 1)) as pool:
        pairs = list(pool.map(_one, examples))
    records = [record for record, _ in pairs]
    reports = [report for _, report in pairs if report is not None]
    aggregate = aggregate_reports(reports)
    trailing = {
        "aggregate": True,
        **aggregate,
        "skipped": sorted(
            r["example_id"] for r in records if "skipped" in r
        ),
        "ingest_errors": ingest_errors + response_errors,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_dumps(record) + "\n")
        fh.write(_dumps(trailing) + "\n")
    write_manifest(args.out, "eval", config, args, [args.out])

    for name in ("correctness_recall", "citation_recall", "citation_precision"):
        value = aggregate.get(name)
        shown = "n/a" if value is None else f"{value:.2f}"
        print(f"{name}: {shown}")
    return 0


def _breakdown_record(example, parsed, oracle, config) -> dict:
    breakdown = score_response(
        parsed, example, oracle, config.weights, strict_em=config.strict_em
    )
    supported = sum(1 for v in breakdown.r2_per_sentence if v > 0)
    relevant = sum(1 for r in breakdown.r3_per_citation if r.value > 0)
    l2 = parsed.sentence_count
    l3 = parsed.citation_count
    return {
        "example_id": example.example_id,
        "r1": breakdown.r1,
        "hits": breakdown.hits,
        "r2_per_sentence": list(breakdown.r2_per_sentence),
        "r3_per_citation": [
            {
                "sentence": r.sentence_position,
                "citation": r.citation_index,
                "passage": r.passage_index,
                "value": r.value,
            }
            for r in breakdown.r3_per_citation
        ],
        "combined": breakdown.combined,
        "citation_recall": 100.0 * supported / l2 if l2 else 0.0,
        "citation_precision": 100.0 * relevant / l3 if l3 else 0.0,
        "degenerate_keys": breakdown.degenerate_keys,
    }


def cmd_score(args, config: RunConfig) -> int:
    examples, _ = load_dataset(args.dataset)
    by_id = {e.example_id: e for e in examples}
    responses, _ = load_responses(args.responses)
    oracle = build_oracle(args, config)

    records = []
    for example_id, output in responses.items():
        if example_id not in by_id:
            records.append({"example_id": example_id, "error": "not in dataset"})
            continue
        example = by_id[example_id]
        try:
            parsed = parse_response(output, example)
            records.append(_breakdown_record(example, parsed, oracle, config))
        except EmptyResponse:
            records.append({"example_id": example_id, "error": "empty response"})
        except OracleUnavailable as exc:
            records.append(
                {"example_id": example_id, "error": f"oracle unavailable: {exc}"}
            )

    for record in records:
        print(_dumps(_round2(record)))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(_dumps(record) + "\n")
        write_manifest(args.out, "score", config, args, [args.out])
    return 0


def cmd_sample(args, config: RunConfig) -> int:
    examples, _ = load_dataset(args.dataset)
    oracle = build_oracle(args, config)
    scripted_set, remote = build_backend(args, config)
    trace_path = args.out + ".trace.jsonl"

    selected_lines: list[str] = []
    trace_lines: list[str] = []
    for example in examples:
        backend = remote if remote is not None else scripted_set.for_example(example.example_id)
        prompt = build_prompt(example, include_demos=config.include_demos)
        if args.mode == "holistic":
            result = holistic_rs(
                example, backend, oracle, config.weights, config.sampler,
                prompt=prompt, strict_em=config.strict_em,
            )
            selected_lines.append(
                _dumps(
                    {
                        "example_id": example.example_id,
                        "mode": args.mode,
                        "text": result.best_text,
                        "reward": result.best_reward,
                    }
                )
            )
            trace_lines.append(
                _dumps(
                    {
                        "example_id": example.example_id,
                        "candidates": [
                            {
                                "index": c.index,
                                "text": c.text,
                                "reward": c.reward,
                                "finished": c.finished,
                            }
                            for c in result.candidates
                        ],
                    }
                )
            )
        else:
            result = fine_grained_beam_search(
                example, backend, oracle, config.weights, config.sampler,
                prompt=prompt, strict_em=config.strict_em,
            )
            selected_lines.append(
                _dumps(
                    {
                        "example_id": example.example_id,
                        "mode": args.mode,
                        "text": result.best_text,
                        "reward": result.best_reward,
                    }
                )
            )
            for step in result.trace:
                record = step.to_record()
                record["example_id"] = example.example_id
                trace_lines.append(_dumps(record))

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(selected_lines) + "\n")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(trace_lines) + "\n")
    write_manifest(args.out, "sample", config, args, [args.out, trace_path])
    return 0


def cmd_rewardmap(args, config: RunConfig) -> int:
    examples, _ = load_dataset(args.dataset)
    by_id = {e.example_id: e for e in examples}
    records, ingest_errors = load_token_records(args.responses)
    oracle = build_oracle(args, config)
    placement = PLACEMENT_BY_MODE[args.mode]

    out_lines = []
    for record in records:
        example_id = str(record["example_id"])
        if example_id not in by_id:
            out_lines.append(_dumps({"example_id": example_id, "error": "not in dataset"}))
            continue
        example = by_id[example_id]
        try:
            parsed = parse_response(str(record["output"]), example)
            breakdown = score_response(
                parsed, example, oracle, config.weights, strict_em=config.strict_em
            )
            logprobs = None
            if record.get("current_logprobs") is not None and record.get("initial_logprobs") is not None:
                logprobs = PolicyLogprobs(
                    tuple(record["current_logprobs"]), tuple(record["initial_logprobs"])
                )
            token_count = int(record["token_count"])
            if placement == "fine_grained":
                bounds = SegmentBoundaries(
                    eos_token_pos=int(record["eos_position"]),
                    sentence_end_positions=tuple(record["sentence_end_positions"]),
                    citation_end_positions=tuple(record["citation_end_positions"]),
                )
                reward_map = fine_grained_token_map(
                    breakdown, bounds, token_count, logprobs, config.beta
                )
            else:
                reward_map = holistic_token_map(
                    breakdown, token_count, logprobs, config.beta
                )
        except (EmptyResponse, BoundaryMismatch, OracleUnavailable, ValueError) as exc:
            out_lines.append(_dumps({"example_id": example_id, "error": str(exc)}))
            continue
        out_lines.append(
            _dumps(
                {
                    "example_id": example_id,
                    "token_count": reward_map.token_count,
                    "rewards": list(reward_map.rewards),
                    "beta": reward_map.beta,
                    "placement": placement,
                }
            )
        )

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out_lines) + "\n")
        if ingest_errors:
            fh.write(_dumps({"ingest_errors": ingest_errors}) + "\n")
    write_manifest(args.out, "rewardmap", config, args, [args.out])
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citeward",
        description="Attribution rewards, reward-guided sampling, and evaluation for cited QA.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p, *, out_required=True, needs_mode=False, needs_backend=False):
        p.add_argument("--config", help="JSON run config (defaults otherwise)")
        p.add_argument("--dataset", required=True, help="dataset JSONL path")
        p.add_argument("--responses", help="responses JSONL path")
        p.add_argument("--out", required=out_required, help="output file path")
        p.add_argument("--oracle", help="scripted:<path> or remote:<url>")
        if needs_backend:
            p.add_argument("--backend", help="scripted:<path> or remote:<url>")
        if needs_mode:
            p.add_argument("--mode", choices=MODE_CHOICES, default="finegrained")
        p.add_argument("--seed", type=int, default=None)

    p_eval = sub.add_parser("eval", help="score (dataset, responses) into a metric report")
    _common(p_eval)
    p_eval.set_defaults(func=cmd_eval, requires_responses=True)

    p_score = sub.add_parser("score", help="print reward breakdowns for responses")
    _common(p_score, out_required=False)
    p_score.set_defaults(func=cmd_score, requires_responses=True)

    p_sample = sub.add_parser("sample", help="reward-guided selection over a dataset")
    _common(p_sample, needs_mode=True, needs_backend=True)
    p_sample.set_defaults(func=cmd_sample, requires_responses=False)

    p_map = sub.add_parser("rewardmap", help="emit per-token reward records")
    _common(p_map, needs_mode=True)
    p_map.set_defaults(func=cmd_rewardmap, requires_responses=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.requires_responses and not args.responses:
        parser.error(f"{args.command} requires --responses")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except (CitewardError, ValueError) as exc:
        sys.stderr.write(
            _dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
