"""Stage orchestration and persistence.

Every stage reads a JSONL file, transforms records with a bounded worker pool,
and writes a JSONL output plus a `<output>.manifest.json` recording input
digests, seed, backend, counts, and pass rates. Rerunning a completed stage
with the same inputs and seed produces byte-identical outputs and manifests;
per-record statuses make interrupted runs resumable.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import benchmark as bench
from .config import Config
from .decisions import apply_decisions, read_log
from .errors import StageError
from .gateway import CostLine, Gateway, ledger_cost_report, cost_report as planning_cost_report
from .grounding import ground, pass_rate_report, verify
from .parsing import BACKEND_GATEWAY, ParseRequest, parse
from .records import (
    STATUS_FAILED,
    STATUS_GROUNDED,
    STATUS_PENDING,
    STATUS_TEXT_VALID,
    STATUS_VERIFIED,
    Expression,
    GroundedSample,
    dumps_record,
    infer_record_type,
    read_jsonl,
    write_jsonl,
)
from .rewrite import rewrite, validate_text

STAGES = ("parse", "rewrite", "validate-text", "ground", "verify",
          "build-sft", "build-benchmark", "stats", "cost-report")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2


@dataclass
class StageResult:
    stage: str
    out_path: str
    counts: dict[str, int] = field(default_factory=dict)
    terminal_errors: int = 0
    pending: int = 0

    @property
    def exit_code(self) -> int:
        if self.terminal_errors:
            return EXIT_ERROR
        if self.pending:
            return EXIT_PARTIAL
        return EXIT_OK


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def load_samples(path: str) -> list[GroundedSample]:
    """Read a stage file of GroundedSample records, or wrap bare Expression
    records (ingest output) into pending samples."""
    samples = []
    for d in read_jsonl(path):
        kind = infer_record_type(d)
        if kind == "grounded_sample":
            samples.append(GroundedSample.from_dict(d))
        elif kind == "expression":
            samples.append(GroundedSample(expression=Expression.from_dict(d)))
        else:
            raise ValueError(f"{path}: unrecognized record (keys {sorted(d)[:5]})")
    return samples


def _map_samples(samples: list[GroundedSample],
                 fn: Callable[[GroundedSample], GroundedSample],
                 concurrency: int) -> list[GroundedSample]:
    if concurrency <= 1:
        return [fn(s) for s in samples]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(fn, samples))


def _stage_parse(sample: GroundedSample, gateway: Gateway) -> GroundedSample:
    if sample.status != STATUS_PENDING or sample.parsed is not None:
        return sample
    try:
        sample.parsed = parse(
            ParseRequest(expression=sample.expression, backend=BACKEND_GATEWAY),
            gateway=gateway)
    except StageError as exc:
        sample.fail(exc.stage, exc.reason)
    except Exception as exc:  # terminal gateway errors
        sample.fail("A1", str(exc))
    return sample


def _stage_rewrite(sample: GroundedSample, gateway: Gateway) -> GroundedSample:
    if sample.status == STATUS_FAILED or sample.parsed is None or sample.cot is not None:
        return sample
    try:
        sample.cot = rewrite(sample.parsed, backend="gateway", gateway=gateway)
    except StageError as exc:
        sample.fail(exc.stage, exc.reason)
    except Exception as exc:
        sample.fail("A2", str(exc))
    return sample


def _stage_validate_text(sample: GroundedSample, gateway: Gateway) -> GroundedSample:
    if sample.status != STATUS_PENDING or sample.parsed is None or sample.cot is None:
        return sample
    payload = {
        "task": "validate_text",
        "expression_id": sample.expression.id,
        "parsed": sample.parsed.to_dict(),
        "cot": sample.cot.to_dict(),
    }
    try:
        response = gateway.call("validate_llm", payload)
    except Exception as exc:
        return sample.fail("A3", str(exc))
    # Cross-check the validator against the local deterministic rules.
    local = validate_text(sample.parsed, sample.cot)
    if response["pass"] and local.passed:
        sample.status = STATUS_TEXT_VALID
    else:
        reasons = response.get("reasons") or local.reasons or ["validator rejected"]
        sample.fail("A3", "; ".join(reasons))
    return sample


def _stage_ground(sample: GroundedSample, gateway: Gateway,
                  context_radius: int) -> GroundedSample:
    if sample.status != STATUS_TEXT_VALID:
        return sample
    assert sample.parsed is not None and sample.cot is not None
    try:
        grounded = ground(sample.parsed, sample.cot, sample.expression, gateway,
                          context_radius=context_radius)
    except StageError as exc:
        return sample.fail(exc.stage, exc.reason)
    except Exception as exc:
        return sample.fail("B1", str(exc))
    return grounded


def _stage_verify(sample: GroundedSample, gateway: Gateway,
                  iou_threshold: float) -> GroundedSample:
    # Already-verified/failed samples are skipped by status; grounded samples
    # with partial (unchecked) verdicts are re-judged from scratch on resume.
    if sample.status != STATUS_GROUNDED:
        return sample
    try:
        return verify(sample, gateway, iou_threshold=iou_threshold)
    except StageError as exc:
        return sample.fail(exc.stage, exc.reason)
    except Exception as exc:
        return sample.fail("B2", str(exc))


def _status_counts(samples: list[GroundedSample]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in samples:
        key = s.status if s.status != STATUS_FAILED else f"failed_{s.failed_stage}"
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


def write_manifest(out_path: str, stage: str, inputs: list[str], seed: int,
                   backend: str, counts: dict[str, Any],
                   extra: Optional[dict[str, Any]] = None) -> str:
    manifest = {
        "stage": stage,
        "inputs": {os.path.basename(p): file_digest(p) for p in inputs},
        "output": {os.path.basename(out_path): file_digest(out_path)},
        "seed": seed,
        "backend": backend,
        "counts": counts,
    }
    if extra:
        manifest.update(extra)
    manifest_path = out_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest_path


def run_stage(stage: str, config: Config, in_path: str, out_path: str,
              backend: Optional[str] = None, seed: Optional[int] = None,
              concurrency: Optional[int] = None,
              decisions_path: Optional[str] = None,
              gateway: Optional[Gateway] = None) -> StageResult:
    """Run one pipeline stage file-to-file. Missing predecessors raise
    FileNotFoundError naming the expected file."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r} (expected one of {STAGES})")
    if not os.path.exists(in_path):
        raise FileNotFoundError(f"stage {stage}: missing predecessor output {in_path}")
    seed = config.seed if seed is None else seed
    concurrency = config.concurrency if concurrency is None else concurrency
    backend_name = backend or "mock"

    result = StageResult(stage=stage, out_path=out_path)

    if stage == "cost-report":
        _run_cost_report(config, in_path, out_path)
        result.counts = {"records": 1}
        write_manifest(out_path, stage, [in_path], seed, backend_name, result.counts)
        return result

    samples = load_samples(in_path)

    if stage in ("parse", "rewrite", "validate-text", "ground", "verify"):
        gw = gateway or config.build_gateway(backend_override=backend, seed=seed)
        fn: Callable[[GroundedSample], GroundedSample]
        if stage == "parse":
            fn = lambda s: _stage_parse(s, gw)
        elif stage == "rewrite":
            fn = lambda s: _stage_rewrite(s, gw)
        elif stage == "validate-text":
            fn = lambda s: _stage_validate_text(s, gw)
        elif stage == "ground":
            fn = lambda s: _stage_ground(s, gw, config.thresholds.context_radius)
        else:
            fn = lambda s: _stage_verify(s, gw, config.thresholds.iou_gt)
        out_samples = _map_samples(samples, fn, concurrency)
        write_jsonl(out_path, (s.to_dict() for s in out_samples))
        result.counts = _status_counts(out_samples)
        result.pending = sum(
            1 for s in out_samples
            if s.status == STATUS_GROUNDED and stage == "verify")
        extra: dict[str, Any] = {}
        if stage == "verify":
            extra["pass_rates"] = pass_rate_report(
                out_samples, config.thresholds.iou_gt).to_dict()
        write_manifest(out_path, stage, [in_path], seed, backend_name,
                       result.counts, extra)
        return result

    if stage == "build-sft":
        records = bench.build_sft(samples, config.thresholds)
        write_jsonl(out_path, records)
        result.counts = {"sft_records": len(records), "input": len(samples)}
        write_manifest(out_path, stage, [in_path], seed, backend_name, result.counts)
        return result

    if stage == "build-benchmark":
        if decisions_path:
            apply_decisions(samples, read_log(decisions_path))
        exclusions = bench.load_exclusion_list(config.exclusion_list)
        built = bench.build_benchmark(samples, exclusions)
        write_jsonl(out_path, (bench.benchmark_record(s) for s in built.admitted))
        pending_path = out_path + ".pending.jsonl"
        write_jsonl(pending_path, (s.to_dict() for s in built.pending))
        result.counts = {
            "admitted": len(built.admitted),
            "pending_review": len(built.pending),
            "dropped": len(built.dropped),
        }
        write_manifest(out_path, stage, [in_path], seed, backend_name, result.counts,
                       {"dropped": [list(d) for d in built.dropped]})
        return result

    if stage == "stats":
        stats = bench.compute_stats([s for s in samples if s.parsed is not None])
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(json.dumps(stats.to_dict(), sort_keys=True, indent=2) + "\n")
        result.counts = {"records": stats.count}
        write_manifest(out_path, stage, [in_path], seed, backend_name, result.counts)
        return result

    raise AssertionError(f"unhandled stage {stage}")


def _run_cost_report(config: Config, in_path: str, out_path: str) -> None:
    """Input is either a planning YAML (stage line items) or a ledger JSONL."""
    import yaml

    if in_path.endswith((".yaml", ".yml", ".json")) and not in_path.endswith(".jsonl"):
        with open(in_path, encoding="utf-8") as f:
            plan = yaml.safe_load(f)
        lines = [CostLine(**row) for row in plan.get("lines", [])]
        report = planning_cost_report(lines, plan.get("published_subtotals"))
    else:
        from .gateway import UsageLedger

        ledger = UsageLedger()
        for event in read_jsonl(in_path):
            ledger.record(event["role"], event.get("prompt_tokens", 0),
                          event.get("completion_tokens", 0),
                          event.get("failure", False), event.get("retry", False))
        report = ledger_cost_report(ledger, config.model_roles(), synthetic=True)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
