"""Shared domain types and the JSONL record schemas exchanged between pipeline stages.

All stage files are JSONL: one record per line, UTF-8, canonical key order,
`schema_version` on every record. Hop levels are stored with the target at
level 0; human-facing reports add 1 so a bare target prints as H.L. = 1.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional

SCHEMA_VERSION = 1

SPLITS = ("train", "val", "test")

# Sample lifecycle, in pipeline order. `failed` carries (stage, reason).
STATUS_PENDING = "pending"
STATUS_TEXT_VALID = "text_valid"
STATUS_GROUNDED = "grounded"
STATUS_VERIFIED = "verified"
STATUS_HUMAN_ACCEPTED = "human_accepted"
STATUS_HUMAN_REJECTED = "human_rejected"
STATUS_FAILED = "failed"

_STATUS_ORDER = {
    STATUS_PENDING: 0,
    STATUS_TEXT_VALID: 1,
    STATUS_GROUNDED: 2,
    STATUS_VERIFIED: 3,
    STATUS_HUMAN_ACCEPTED: 4,
    STATUS_HUMAN_REJECTED: 4,
}

VERDICT_ACCEPT = "accept"
VERDICT_REJECT = "reject"
VERDICT_UNCHECKED = "unchecked"

SLOT_ANCHOR = "anchor"
SLOT_TARGET = "target"

_PUNCT_RE = re.compile(r"([,.;:!?()\[\]\"])")


class RecordDecodeError(ValueError):
    """A JSONL line could not be parsed at all (distinct from invariant violations)."""


def tokenize(text: str) -> list[str]:
    """Whitespace-split after detaching punctuation into standalone tokens."""
    detached = _PUNCT_RE.sub(r" \1 ", text)
    detached = detached.replace("'s", " 's")
    return detached.split()


def normalize_text(text: str) -> str:
    """Canonical text form: punctuation detached, single spaces."""
    return " ".join(tokenize(text))


@dataclass
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def to_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, xs: Iterable[float]) -> "Box":
        a, b, c, d = (float(v) for v in xs)
        return cls(a, b, c, d)

    def area(self) -> float:
        return max(0.0, self.x_max - self.x_min) * max(0.0, self.y_max - self.y_min)

    def is_degenerate(self) -> bool:
        return self.area() == 0.0

    def violations(self) -> list[str]:
        out = []
        if self.x_min > self.x_max:
            out.append("Box: x_min > x_max")
        if self.y_min > self.y_max:
            out.append("Box: y_min > y_max")
        return out


@dataclass
class Mask:
    """COCO-compatible RLE mask: column-major counts, alternating bg/fg."""

    width: int
    height: int
    counts: list[int]

    def violations(self) -> list[str]:
        out = []
        if self.width <= 0 or self.height <= 0:
            out.append("Mask: non-positive dimensions")
        total = sum(self.counts)
        if total != self.width * self.height:
            out.append(
                f"Mask: run counts sum {total} != width*height {self.width * self.height}"
            )
        if any(c < 0 for c in self.counts):
            out.append("Mask: negative run count")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"width": self.width, "height": self.height, "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Mask":
        return cls(width=int(d["width"]), height=int(d["height"]), counts=[int(c) for c in d["counts"]])


@dataclass
class Expression:
    """One referring expression tied to an image and a ground-truth target annotation."""

    id: str
    image_id: str
    image_width: int
    image_height: int
    text: str
    tokens: list[str]
    split: str
    gt_box: Box
    gt_mask: Optional[Mask] = None
    image_uri: Optional[str] = None

    def violations(self) -> list[str]:
        out = []
        if self.image_width <= 0:
            out.append("Expression: image_width must be positive")
        if self.image_height <= 0:
            out.append("Expression: image_height must be positive")
        if self.split not in SPLITS:
            out.append(f"Expression: unknown split {self.split!r}")
        if " ".join(self.tokens) != normalize_text(self.text):
            out.append("Expression: tokens do not reconstruct normalized text")
        out.extend(self.gt_box.violations())
        if not out:
            b = self.gt_box
            if b.x_min < 0 or b.y_min < 0 or b.x_max > self.image_width or b.y_max > self.image_height:
                out.append("Expression: gt_box outside image bounds")
        if self.gt_mask is not None:
            out.extend(self.gt_mask.violations())
        return out

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "image_id": self.image_id,
            "image_width": self.image_width,
            "image_height": self.image_height,
            "text": self.text,
            "tokens": list(self.tokens),
            "split": self.split,
            "gt_box": self.gt_box.to_list(),
            "gt_mask": self.gt_mask.to_dict() if self.gt_mask else None,
            "image_uri": self.image_uri,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Expression":
        return cls(
            id=str(d["id"]),
            image_id=str(d["image_id"]),
            image_width=int(d["image_width"]),
            image_height=int(d["image_height"]),
            text=d["text"],
            tokens=list(d["tokens"]),
            split=d["split"],
            gt_box=Box.from_list(d["gt_box"]),
            gt_mask=Mask.from_dict(d["gt_mask"]) if d.get("gt_mask") else None,
            image_uri=d.get("image_uri"),
        )


@dataclass
class ParsedNoun:
    text: str
    span_start: int
    span_end: int
    hop_level: int  # target = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "span_start": self.span_start,
            "span_end": self.span_end,
            "hop_level": self.hop_level,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ParsedNoun":
        return cls(d["text"], int(d["span_start"]), int(d["span_end"]), int(d["hop_level"]))


@dataclass
class ParsedExpression:
    expression_id: str
    nouns: list[ParsedNoun]
    target_indices: list[int]

    @property
    def l_max_internal(self) -> int:
        return max(n.hop_level for n in self.nouns)

    @property
    def l_max_reported(self) -> int:
        return self.l_max_internal + 1

    def anchor_count(self) -> int:
        return len(self.nouns) - len(self.target_indices)

    def violations(self, tokens: Optional[list[str]] = None) -> list[str]:
        out = []
        if not self.nouns:
            out.append("ParsedExpression: empty noun list")
            return out
        if not self.target_indices:
            out.append("ParsedExpression: target_indices is empty")
        for i in self.target_indices:
            if not 0 <= i < len(self.nouns):
                out.append(f"ParsedExpression: target index {i} out of range")
            elif self.nouns[i].hop_level != 0:
                out.append(f"ParsedExpression: target index {i} has hop_level != 0")
        expected_targets = [i for i, n in enumerate(self.nouns) if n.hop_level == 0]
        if sorted(self.target_indices) != expected_targets:
            out.append("ParsedExpression: target_indices must be exactly the level-0 nouns")
        levels = {n.hop_level for n in self.nouns}
        for k in sorted(levels):
            if k > 0 and (k - 1) not in levels:
                out.append(f"hop chain gap at level {k - 1}")
        for i, n in enumerate(self.nouns):
            if n.hop_level < 0:
                out.append(f"ParsedExpression: noun {i} has negative hop_level")
            if not n.span_start < n.span_end:
                out.append(f"ParsedExpression: noun {i} has empty span")
            if n.span_start < 0:
                out.append(f"ParsedExpression: noun {i} span_start < 0")
            if tokens is not None:
                if n.span_end > len(tokens):
                    out.append(f"ParsedExpression: noun {i} span_end beyond token count")
                elif n.text != " ".join(tokens[n.span_start:n.span_end]):
                    out.append(f"ParsedExpression: noun {i} text does not match its span")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "expression_id": self.expression_id,
            "nouns": [n.to_dict() for n in self.nouns],
            "target_indices": list(self.target_indices),
            "l_max_internal": self.l_max_internal,
            "l_max_reported": self.l_max_reported,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ParsedExpression":
        return cls(
            expression_id=str(d["expression_id"]),
            nouns=[ParsedNoun.from_dict(n) for n in d["nouns"]],
            target_indices=[int(i) for i in d["target_indices"]],
        )


@dataclass
class CotAnswer:
    """Rewritten expression with ordered grounding slots: anchors by descending
    hop level, target last."""

    answer_text: str
    slots: list[tuple[int, str]]  # (noun_index, anchor|target)

    LOC_MARKER = "[LOC]"

    def violations(self, parsed: Optional[ParsedExpression] = None) -> list[str]:
        out = []
        targets = [k for k, (_, kind) in enumerate(self.slots) if kind == SLOT_TARGET]
        if len(targets) != 1:
            out.append("CotAnswer: exactly one target slot required")
        elif targets[0] != len(self.slots) - 1:
            out.append("target slot must be last")
        for _, kind in self.slots:
            if kind not in (SLOT_ANCHOR, SLOT_TARGET):
                out.append(f"CotAnswer: unknown slot kind {kind!r}")
        markers = self.answer_text.count(self.LOC_MARKER)
        if markers != len(self.slots):
            out.append(
                f"CotAnswer: {markers} slot markers in answer_text vs {len(self.slots)} slots"
            )
        if parsed is not None:
            for idx, _ in self.slots:
                if not 0 <= idx < len(parsed.nouns):
                    out.append(f"CotAnswer: slot noun_index {idx} out of range")
            anchor_levels = [
                parsed.nouns[idx].hop_level
                for idx, kind in self.slots
                if kind == SLOT_ANCHOR and 0 <= idx < len(parsed.nouns)
            ]
            if any(a < b for a, b in zip(anchor_levels, anchor_levels[1:])):
                out.append("CotAnswer: anchor slots not in non-increasing hop order")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "answer_text": self.answer_text,
            "slots": [[i, k] for i, k in self.slots],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CotAnswer":
        return cls(
            answer_text=d["answer_text"],
            slots=[(int(i), str(k)) for i, k in d["slots"]],
        )


@dataclass
class GroundedSample:
    """A pipeline sample carrying every stage's artifacts plus its lifecycle status.

    The source expression is embedded so each stage file is self-contained.
    """

    expression: Expression
    parsed: Optional[ParsedExpression] = None
    cot: Optional[CotAnswer] = None
    boxes: Optional[list[Box]] = None
    confidences: Optional[list[float]] = None
    judge_verdicts: Optional[list[str]] = None
    target_iou_gt: Optional[float] = None
    status: str = STATUS_PENDING
    failed_stage: Optional[str] = None
    failed_reason: Optional[str] = None

    def status_rank(self) -> int:
        return _STATUS_ORDER.get(self.status, -1)

    def violations(self) -> list[str]:
        out = self.expression.violations()
        if self.parsed is not None:
            out.extend(self.parsed.violations(self.expression.tokens))
        if self.cot is not None and self.parsed is not None:
            out.extend(self.cot.violations(self.parsed))
        if self.status == STATUS_FAILED:
            if not self.failed_stage:
                out.append("GroundedSample: failed status without failed_stage")
        elif self.status not in _STATUS_ORDER:
            out.append(f"GroundedSample: unknown status {self.status!r}")
        if self.status_rank() >= _STATUS_ORDER[STATUS_GROUNDED] and self.parsed is not None:
            n = len(self.parsed.nouns)
            if self.boxes is None or len(self.boxes) != n:
                out.append("GroundedSample: boxes length must equal noun count once grounded")
            if self.confidences is not None and any(not 0 <= c <= 1 for c in self.confidences):
                out.append("GroundedSample: confidence outside [0,1]")
        if self.status in (STATUS_VERIFIED, STATUS_HUMAN_ACCEPTED):
            if self.target_iou_gt is None or not self.target_iou_gt > 0.7:
                out.append("GroundedSample: verified requires target_iou_gt > 0.7")
            if self.judge_verdicts is None or any(v != VERDICT_ACCEPT for v in self.judge_verdicts):
                out.append("GroundedSample: verified requires all judge verdicts accept")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "expression": self.expression.to_dict(),
            "parsed": self.parsed.to_dict() if self.parsed else None,
            "cot": self.cot.to_dict() if self.cot else None,
            "boxes": [b.to_list() for b in self.boxes] if self.boxes is not None else None,
            "confidences": list(self.confidences) if self.confidences is not None else None,
            "judge_verdicts": list(self.judge_verdicts) if self.judge_verdicts is not None else None,
            "target_iou_gt": self.target_iou_gt,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "failed_reason": self.failed_reason,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GroundedSample":
        return cls(
            expression=Expression.from_dict(d["expression"]),
            parsed=ParsedExpression.from_dict(d["parsed"]) if d.get("parsed") else None,
            cot=CotAnswer.from_dict(d["cot"]) if d.get("cot") else None,
            boxes=[Box.from_list(b) for b in d["boxes"]] if d.get("boxes") is not None else None,
            confidences=[float(c) for c in d["confidences"]] if d.get("confidences") is not None else None,
            judge_verdicts=[str(v) for v in d["judge_verdicts"]] if d.get("judge_verdicts") is not None else None,
            target_iou_gt=d.get("target_iou_gt"),
            status=d.get("status", STATUS_PENDING),
            failed_stage=d.get("failed_stage"),
            failed_reason=d.get("failed_reason"),
        )

    def fail(self, stage: str, reason: str) -> "GroundedSample":
        self.status = STATUS_FAILED
        self.failed_stage = stage
        self.failed_reason = reason
        return self


_RECORD_TYPES = {
    "expression": Expression,
    "parsed_expression": ParsedExpression,
    "cot_answer": CotAnswer,
    "grounded_sample": GroundedSample,
}


def infer_record_type(d: dict[str, Any]) -> Optional[str]:
    if "expression" in d and "status" in d:
        return "grounded_sample"
    if "image_id" in d and "gt_box" in d:
        return "expression"
    if "nouns" in d and "target_indices" in d:
        return "parsed_expression"
    if "answer_text" in d and "slots" in d:
        return "cot_answer"
    return None


def validate_record(record: dict[str, Any], record_type: Optional[str] = None) -> list[str]:
    """Return invariant violations for one decoded stage record ([] if clean)."""
    if record_type is None:
        record_type = infer_record_type(record)
    if record_type is None or record_type not in _RECORD_TYPES:
        return [f"unknown record type (keys: {sorted(record)[:6]})"]
    if record.get("schema_version") != SCHEMA_VERSION:
        return [f"schema_version must be {SCHEMA_VERSION}"]
    try:
        obj = _RECORD_TYPES[record_type].from_dict(record)
    except (KeyError, TypeError, ValueError) as exc:
        return [f"{record_type}: missing or malformed field ({exc})"]
    return obj.violations()


def dumps_record(d: dict[str, Any]) -> str:
    """Canonical one-line JSON encoding used by every stage file."""
    return json.dumps(d, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def loads_record(line: str) -> dict[str, Any]:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordDecodeError(f"malformed JSONL line: {exc}") from exc
    if not isinstance(d, dict):
        raise RecordDecodeError("JSONL line is not an object")
    return d


def write_jsonl(path, dicts: Iterable[dict[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for d in dicts:
            f.write(dumps_record(d) + "\n")
            n += 1
    return n


def read_jsonl(path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield loads_record(line)
