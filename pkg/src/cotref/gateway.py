"""Uniform client over the four external model roles (text parser, text
validator, visual grounder, visual judge) with JSON-schema enforcement,
retries, a deterministic mock backend, and token/cost accounting.

The mock backend is a pure function of (role, payload bytes, attempt, seed):
identical runs produce identical ledgers and identical downstream artifacts.
Cost figures from mock runs are synthetic (whitespace token counts).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Optional

import jsonschema

from .errors import GatewayError
from .geometry import box_iou
from .parsing import rules_parse
from .records import Box, dumps_record
from .rewrite import validate_text
from . import records as rec

ROLE_PARSE = "parse_llm"
ROLE_VALIDATE = "validate_llm"
ROLE_GROUND = "ground_vlm"
ROLE_JUDGE = "judge_vlm"
ROLES = (ROLE_PARSE, ROLE_VALIDATE, ROLE_GROUND, ROLE_JUDGE)

DEFAULT_RETRIES = 2
DEFAULT_CONCURRENCY = 8

RESPONSE_SCHEMAS: dict[str, dict] = {
    "parse": {
        "type": "object",
        "required": ["sentence", "tokens", "nouns", "target_indices"],
        "properties": {
            "sentence": {"type": "string"},
            "tokens": {"type": "array", "items": {"type": "string"}},
            "nouns": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["text", "start", "end", "level"],
                    "properties": {
                        "text": {"type": "string"},
                        "start": {"type": "integer", "minimum": 0},
                        "end": {"type": "integer", "minimum": 1},
                        "level": {"type": "integer", "minimum": 0},
                    },
                },
            },
            "target_indices": {"type": "array", "items": {"type": "integer"}},
        },
    },
    "rewrite": {
        "type": "object",
        "required": ["answer"],
        "properties": {"answer": {"type": "string"}},
    },
    "validate_text": {
        "type": "object",
        "required": ["pass"],
        "properties": {
            "pass": {"type": "boolean"},
            "reasons": {"type": "array", "items": {"type": "string"}},
        },
    },
    "ground": {
        "type": "object",
        "required": ["noun_bboxes"],
        "properties": {
            "noun_bboxes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["noun_index", "bbox_xyxy", "confidence"],
                    "properties": {
                        "noun_index": {"type": "integer", "minimum": 0},
                        "text": {"type": "string"},
                        "bbox_xyxy": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 4,
                            "maxItems": 4,
                        },
                        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        },
    },
    "judge": {
        "type": "object",
        "required": ["verdict"],
        "properties": {"verdict": {"type": "string", "enum": ["accept", "reject"]}},
    },
}


@dataclass
class ModelRole:
    role: str
    base_uri: str = ""
    model: str = ""
    auth_env: str = ""
    price_per_million_tokens: float = 0.0

    def __post_init__(self) -> None:
        if self.price_per_million_tokens < 0:
            raise ValueError("price_per_million_tokens must be >= 0")


@dataclass
class RoleCounters:
    requests: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    failures: int = 0
    retries: int = 0


class UsageLedger:
    """Per-role monotone counters plus an optional JSONL event log."""

    def __init__(self, event_log_path: Optional[str] = None):
        self._lock = threading.Lock()
        self.counters: dict[str, RoleCounters] = {r: RoleCounters() for r in ROLES}
        self.event_log_path = event_log_path

    def record(self, role: str, prompt_tokens: int = 0, completion_tokens: int = 0,
               failure: bool = False, retry: bool = False) -> None:
        with self._lock:
            c = self.counters.setdefault(role, RoleCounters())
            c.requests += 1
            c.prompt_tokens += prompt_tokens
            c.completion_tokens += completion_tokens
            if failure:
                c.failures += 1
            if retry:
                c.retries += 1
            if self.event_log_path:
                event = {
                    "role": role,
                    "prompt_tokens": prompt_tokens,
                    "completion_tokens": completion_tokens,
                    "failure": failure,
                    "retry": retry,
                }
                with open(self.event_log_path, "a", encoding="utf-8") as f:
                    f.write(dumps_record(event) + "\n")

    def total_tokens(self, role: str) -> int:
        c = self.counters.get(role, RoleCounters())
        return c.prompt_tokens + c.completion_tokens

    def to_dict(self) -> dict[str, dict[str, int]]:
        return {
            role: vars(c).copy()
            for role, c in sorted(self.counters.items())
        }


def _count_tokens(text: str) -> int:
    return len(text.split())


def payload_digest(payload: dict[str, Any]) -> str:
    return hashlib.sha256(dumps_record(payload).encode("utf-8")).hexdigest()


def _stable_rand(*parts: Any) -> float:
    """Deterministic pseudo-uniform in [0,1) from hashed parts."""
    h = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") / 2**64


class MockBackend:
    """Deterministic stand-in for every model role.

    Resolution order: exact-match fixture table keyed by payload digest, then a
    rules-backed synthesis per task. Grounding uses fixture boxes when present
    (confidence 0.9) and hash-synthesized boxes otherwise; the judge accepts
    iff the submitted box overlaps its fixture reference with IoU >= 0.5.
    """

    def __init__(self, seed: int = 0,
                 fixture_table: Optional[dict[str, Any]] = None,
                 grounding_fixtures: Optional[dict[str, list[list[float]]]] = None,
                 judge_fixtures: Optional[dict[str, dict[str, list[float]]]] = None):
        self.seed = seed
        self.fixture_table = fixture_table or {}
        self.grounding_fixtures = grounding_fixtures or {}
        self.judge_fixtures = judge_fixtures or {}

    def complete(self, role: str, payload: dict[str, Any], attempt: int) -> str:
        digest = payload_digest(payload)
        if digest in self.fixture_table:
            entry = self.fixture_table[digest]
            if isinstance(entry, list):
                entry = entry[min(attempt, len(entry) - 1)]
            return entry if isinstance(entry, str) else dumps_record(entry)
        task = payload.get("task")
        if task == "parse":
            return dumps_record(self._parse(payload))
        if task == "rewrite":
            return dumps_record(self._rewrite(payload))
        if task == "validate_text":
            return dumps_record(self._validate(payload))
        if task == "ground":
            return dumps_record(self._ground(payload))
        if task == "judge":
            return dumps_record(self._judge(payload))
        raise GatewayError(f"mock backend: unknown task {task!r}")

    def _parse(self, payload: dict[str, Any]) -> dict[str, Any]:
        tokens = list(payload["tokens"])
        parsed = rules_parse(tokens, payload.get("expression_id", ""))
        return {
            "sentence": payload.get("sentence", " ".join(tokens)),
            "tokens": tokens,
            "nouns": [
                {"text": n.text, "start": n.span_start, "end": n.span_end,
                 "level": n.hop_level}
                for n in parsed.nouns
            ],
            "target_indices": parsed.target_indices,
        }

    def _rewrite(self, payload: dict[str, Any]) -> dict[str, Any]:
        objects = payload["objects"]
        main = next(o for o in objects if o["tag"] == "main")
        anchors = [(k, o) for k, o in enumerate(objects) if o["tag"] != "main"]
        anchors.sort(key=lambda ko: (-int(ko[1]["level"]), ko[0]))
        if not anchors:
            return {"answer": f"<seg main>{main['text']}</seg> is the target."}
        steps = []
        for k, (_, o) in enumerate(anchors):
            verb = "First locate" if k == 0 else "then find"
            steps.append(f"{verb} <seg {o['tag']}>{o['text']}</seg>")
        steps.append(f"and therefore the target is <seg main>{main['text']}</seg>")
        return {"answer": f"Target is {main['text']}. " + ", ".join(steps) + "."}

    def _validate(self, payload: dict[str, Any]) -> dict[str, Any]:
        parsed = rec.ParsedExpression.from_dict(payload["parsed"])
        cot = rec.CotAnswer.from_dict(payload["cot"])
        verdict = validate_text(parsed, cot)
        return {"pass": verdict.passed, "reasons": verdict.reasons}

    def _synth_box(self, expression_id: str, index: int,
                   width: float, height: float) -> list[float]:
        rx = _stable_rand(self.seed, expression_id, index, "x")
        ry = _stable_rand(self.seed, expression_id, index, "y")
        rw = _stable_rand(self.seed, expression_id, index, "w")
        rh = _stable_rand(self.seed, expression_id, index, "h")
        w = (0.1 + 0.4 * rw) * width
        h = (0.1 + 0.4 * rh) * height
        x = rx * (width - w)
        y = ry * (height - h)
        return [round(x, 2), round(y, 2), round(x + w, 2), round(y + h, 2)]

    def _ground(self, payload: dict[str, Any]) -> dict[str, Any]:
        expr_id = payload.get("expression_id", "")
        width = float(payload["image_width"])
        height = float(payload["image_height"])
        fixtures = self.grounding_fixtures.get(expr_id)
        entries = []
        for noun in payload["nouns"]:
            idx = int(noun["index"])
            if fixtures is not None and idx < len(fixtures):
                bbox = [float(v) for v in fixtures[idx]]
                conf = 0.9
            else:
                bbox = self._synth_box(expr_id, idx, width, height)
                conf = round(0.5 + 0.5 * _stable_rand(self.seed, expr_id, idx, "c"), 3)
            entries.append({"noun_index": idx, "text": noun.get("text", ""),
                            "bbox_xyxy": bbox, "confidence": conf})
        return {"noun_bboxes": entries}

    def _judge(self, payload: dict[str, Any]) -> dict[str, Any]:
        expr_id = payload.get("expression_id", "")
        idx = int(payload["noun_index"])
        box = Box.from_list(payload["box"])
        ref = None
        overrides = self.judge_fixtures.get(expr_id, {})
        if str(idx) in overrides:
            ref = overrides[str(idx)]
        elif idx in overrides:
            ref = overrides[idx]
        else:
            fixtures = self.grounding_fixtures.get(expr_id)
            if fixtures is not None and idx < len(fixtures):
                ref = fixtures[idx]
        if ref is None:
            return {"verdict": "accept"}
        iou = box_iou(box, Box.from_list([float(v) for v in ref]))
        return {"verdict": "accept" if iou >= 0.5 else "reject"}


class HttpBackend:
    """JSON-over-HTTPS chat-completion style backend.

    Sends a system+user message pair and expects the assistant message content
    to be the JSON response body.
    """

    def __init__(self, roles: dict[str, ModelRole], timeout: float = 60.0,
                 client: Any = None):
        self.roles = roles
        self.timeout = timeout
        self._client = client

    def _get_client(self):
        if self._client is None:
            import httpx

            self._client = httpx.Client(timeout=self.timeout)
        return self._client

    def complete(self, role: str, payload: dict[str, Any], attempt: int) -> str:
        cfg = self.roles[role]
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(cfg.auth_env, "") if cfg.auth_env else ""
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": cfg.model,
            "messages": [
                {"role": "system",
                 "content": "Return only valid JSON following the task schema."},
                {"role": "user", "content": dumps_record(payload)},
            ],
        }
        try:
            resp = self._get_client().post(cfg.base_uri, json=body, headers=headers)
            resp.raise_for_status()
            data = resp.json()
        except Exception as exc:  # transport failures are retryable
            raise GatewayError(f"transport failure for {role}: {exc}", retryable=True)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"unexpected completion shape: {exc}", raw=str(data))


class Gateway:
    """Schema-enforcing, retrying front door to the four model roles."""

    def __init__(self, roles: Optional[dict[str, ModelRole]] = None,
                 backend: Any = None, ledger: Optional[UsageLedger] = None,
                 retries: int = DEFAULT_RETRIES,
                 concurrency: int = DEFAULT_CONCURRENCY,
                 backoff_base: float = 0.0):
        self.roles = roles or {r: ModelRole(role=r) for r in ROLES}
        self.backend = backend if backend is not None else MockBackend()
        self.ledger = ledger or UsageLedger()
        self.retries = retries
        self.backoff_base = backoff_base
        self._budgets = {r: threading.Semaphore(concurrency) for r in self.roles}

    def call(self, role: str, payload: dict[str, Any]) -> dict[str, Any]:
        if role not in self.roles:
            raise GatewayError(f"unknown model role {role!r}")
        task = payload.get("task")
        schema = RESPONSE_SCHEMAS.get(task or "")
        if schema is None:
            raise GatewayError(f"no response schema registered for task {task!r}")
        attempt_payload = dict(payload)
        last_raw = ""
        budget = self._budgets.get(role)
        for attempt in range(self.retries + 1):
            if attempt > 0 and self.backoff_base > 0:
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
            if budget is not None:
                budget.acquire()
            try:
                raw = self.backend.complete(role, attempt_payload, attempt)
            except GatewayError as exc:
                self.ledger.record(role, _count_tokens(dumps_record(attempt_payload)),
                                   0, failure=True, retry=attempt > 0)
                if exc.retryable and attempt < self.retries:
                    continue
                raise
            finally:
                if budget is not None:
                    budget.release()
            last_raw = raw
            prompt_tokens = _count_tokens(dumps_record(attempt_payload))
            completion_tokens = _count_tokens(raw)
            violation = None
            try:
                response = json.loads(raw)
                jsonschema.validate(response, schema)
            except json.JSONDecodeError as exc:
                violation = f"response is not valid JSON: {exc}"
            except jsonschema.ValidationError as exc:
                violation = f"response violates schema: {exc.message}"
            if violation is None:
                self.ledger.record(role, prompt_tokens, completion_tokens,
                                   retry=attempt > 0)
                return response
            self.ledger.record(role, prompt_tokens, completion_tokens,
                               failure=True, retry=attempt > 0)
            # Feed the violation back so a live model can self-correct.
            attempt_payload = dict(payload)
            attempt_payload["schema_violation"] = violation
        raise GatewayError(
            f"{role} response failed schema validation after {self.retries} retries",
            raw=last_raw,
        )


def estimate_cost(samples: int, tokens_per_query: float, price: float) -> float:
    """Planning cost in currency units, reported to the cent:
    samples x tokens_per_query x price / 1e6."""
    if samples < 0 or tokens_per_query < 0 or price < 0:
        raise ValueError("estimate_cost inputs must be non-negative")
    return round(samples * tokens_per_query * price / 1e6, 2)


@dataclass
class CostLine:
    stage: str
    kind: str  # query | verification
    samples: int
    tokens_per_item: float
    price_per_million: float

    @property
    def cost(self) -> float:
        return estimate_cost(self.samples, self.tokens_per_item, self.price_per_million)


def cost_report(lines: list[CostLine],
                published_subtotals: Optional[dict[str, float]] = None) -> dict[str, Any]:
    """Per-stage and total cost table from planning inputs.

    When `published_subtotals` is given, each stage's computed sum is compared
    against the published figure and flagged when they disagree by more than a
    cent; the report never adopts an inconsistent published subtotal.
    """
    stages: dict[str, dict[str, Any]] = {}
    for line in lines:
        entry = stages.setdefault(line.stage, {"lines": [], "subtotal": 0.0})
        entry["lines"].append({
            "kind": line.kind,
            "samples": line.samples,
            "tokens_per_item": line.tokens_per_item,
            "price_per_million": line.price_per_million,
            "cost": line.cost,
        })
        entry["subtotal"] = round(entry["subtotal"] + line.cost, 2)
    total = round(sum(e["subtotal"] for e in stages.values()), 2)
    report: dict[str, Any] = {"stages": stages, "total": total}
    if published_subtotals:
        checks = {}
        for stage, published in published_subtotals.items():
            computed = stages.get(stage, {}).get("subtotal", 0.0)
            checks[stage] = {
                "published": published,
                "computed": computed,
                "consistent": abs(computed - published) <= 0.01,
            }
        report["published_subtotal_checks"] = checks
    return report


def ledger_cost_report(ledger: UsageLedger, roles: dict[str, ModelRole],
                       synthetic: bool = False) -> dict[str, Any]:
    """Cost table from recorded usage counters."""
    per_role = {}
    total = 0.0
    for role, counters in sorted(ledger.counters.items()):
        price = roles[role].price_per_million_tokens if role in roles else 0.0
        tokens = counters.prompt_tokens + counters.completion_tokens
        cost = round(tokens * price / 1e6, 2)
        per_role[role] = {
            "requests": counters.requests,
            "tokens": tokens,
            "failures": counters.failures,
            "retries": counters.retries,
            "price_per_million": price,
            "cost": cost,
        }
        total = round(total + cost, 2)
    return {"roles": per_role, "total": total, "synthetic": synthetic}
