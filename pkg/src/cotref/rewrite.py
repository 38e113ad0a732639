"""Rewrite-by-reasoning-order (stage A.2) and textual validation (stage A.3),
plus deterministic local audit checkers.

The rewrite grounds anchors before the target, sorted by descending hop level
(equal-hop anchors keep appearance order), with the target always last. The
local rewriter emits a fixed template; gateway answers are parsed from either
the `<seg nK>`/`<seg main>` tag grammar or explicit `[LOC]` slot lists.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import StageError
from .parsing import Lexicons, rules_parse
from .records import (
    SLOT_ANCHOR,
    SLOT_TARGET,
    CotAnswer,
    ParsedExpression,
    tokenize,
)

STAGE_A2 = "A2"

LOC = CotAnswer.LOC_MARKER

_SEG_TAG_RE = re.compile(r"<seg (main|n\d+)>(.*?)</seg>", re.DOTALL)


@dataclass
class TextVerdict:
    passed: bool
    reasons: list[str] = field(default_factory=list)


def slot_order(parsed: ParsedExpression) -> list[tuple[int, str]]:
    """Canonical slot order: anchors by descending hop level (appearance order
    ties), extra level-0 appositives, then the single slot-bearing target."""
    primary_target = parsed.target_indices[0]
    rest = [i for i in range(len(parsed.nouns)) if i != primary_target]
    rest.sort(key=lambda i: (-parsed.nouns[i].hop_level, i))
    return [(i, SLOT_ANCHOR) for i in rest] + [(primary_target, SLOT_TARGET)]


def render_template(parsed: ParsedExpression) -> CotAnswer:
    """Fixed-template rewrite; correct by construction for validate_text."""
    slots = slot_order(parsed)
    if len(slots) == 1:
        idx = slots[0][0]
        text = f"{parsed.nouns[idx].text} is {LOC}"
        return CotAnswer(answer_text=text, slots=slots)
    parts = []
    for k, (idx, kind) in enumerate(slots):
        noun = parsed.nouns[idx].text
        if kind == SLOT_TARGET:
            parts.append(f"so the target is {noun} {LOC}")
        elif k == 0:
            parts.append(f"First locate {noun} {LOC}")
        else:
            parts.append(f"then {noun} {LOC}")
    return CotAnswer(answer_text=", ".join(parts) + ".", slots=slots)


def anchor_tags(parsed: ParsedExpression) -> dict[str, int]:
    """Tag naming used in gateway rewrite payloads: anchors n1..nK in appearance
    order, the slot-bearing target is `main`."""
    tags: dict[str, int] = {}
    k = 0
    primary_target = parsed.target_indices[0]
    for i in range(len(parsed.nouns)):
        if i == primary_target:
            tags["main"] = i
        else:
            k += 1
            tags[f"n{k}"] = i
    return tags


def parse_gateway_answer(response: dict[str, Any], parsed: ParsedExpression) -> CotAnswer:
    """Normalize a gateway rewrite answer to a CotAnswer.

    Accepts the `<seg nK>text</seg>` tag grammar or an answer with bare [LOC]
    markers plus an explicit `slots` tag list.
    """
    answer = response.get("answer")
    if not isinstance(answer, str):
        raise StageError(STAGE_A2, "rewrite response missing 'answer' string",
                         raw=str(response))
    tags = anchor_tags(parsed)
    if "<seg" in answer:
        slots: list[tuple[int, str]] = []

        def _sub(m: re.Match) -> str:
            tag, text = m.group(1), m.group(2).strip()
            if tag not in tags:
                raise StageError(STAGE_A2, f"unknown segment tag <seg {tag}>", raw=answer)
            idx = tags[tag]
            slots.append((idx, SLOT_TARGET if tag == "main" else SLOT_ANCHOR))
            return f"{text} {LOC}"

        text = _SEG_TAG_RE.sub(_sub, answer)
        if not slots:
            raise StageError(STAGE_A2, "no segment tags in rewrite answer", raw=answer)
        return CotAnswer(answer_text=" ".join(text.split()), slots=slots)
    if LOC in answer and isinstance(response.get("slots"), list):
        slots = []
        for tag in response["slots"]:
            if tag not in tags:
                raise StageError(STAGE_A2, f"unknown slot tag {tag!r}", raw=answer)
            slots.append((tags[tag], SLOT_TARGET if tag == "main" else SLOT_ANCHOR))
        return CotAnswer(answer_text=answer, slots=slots)
    raise StageError(STAGE_A2, "rewrite answer has no recognizable slot grammar",
                     raw=answer)


def rewrite(parsed: ParsedExpression, backend: str = "rules",
            gateway: Any = None) -> CotAnswer:
    """Stage A.2: produce the reasoning-ordered answer with grounding slots."""
    if backend == "rules":
        cot = render_template(parsed)
    elif backend == "gateway":
        if gateway is None:
            raise ValueError("gateway backend selected but no gateway provided")
        payload = {
            "task": "rewrite",
            "expression_id": parsed.expression_id,
            "objects": [
                {"tag": tag, "text": parsed.nouns[idx].text,
                 "level": parsed.nouns[idx].hop_level}
                for tag, idx in sorted(anchor_tags(parsed).items(),
                                       key=lambda kv: kv[1])
            ],
        }
        response = gateway.call("parse_llm", payload)
        cot = parse_gateway_answer(response, parsed)
    else:
        raise ValueError(f"unknown rewrite backend {backend!r}")
    verdict = validate_text(parsed, cot)
    if backend == "gateway" and not verdict.passed:
        # Not silently repaired: A.3 statistics must stay meaningful.
        raise StageError(STAGE_A2, "; ".join(verdict.reasons), raw=cot.answer_text)
    return cot


def validate_text(parsed: ParsedExpression, cot: CotAnswer) -> TextVerdict:
    """Stage A.3: coverage (every noun in exactly one slot) and order
    consistency (anchors non-increasing in hop level, target last)."""
    reasons: list[str] = []
    seen: dict[int, int] = {}
    for idx, _ in cot.slots:
        seen[idx] = seen.get(idx, 0) + 1
    for i in range(len(parsed.nouns)):
        if i not in seen:
            reasons.append(f"coverage: noun {i} missing")
        elif seen[i] > 1:
            reasons.append(f"coverage: noun {i} duplicated")
    for idx in seen:
        if not 0 <= idx < len(parsed.nouns):
            reasons.append(f"coverage: slot index {idx} out of range")

    target_positions = [k for k, (_, kind) in enumerate(cot.slots) if kind == SLOT_TARGET]
    if not target_positions:
        reasons.append("order: no target slot")
    else:
        if len(target_positions) > 1:
            reasons.append("order: multiple target slots")
        if target_positions[-1] != len(cot.slots) - 1:
            reasons.append("order: anchor after target")
    anchor_levels = [
        parsed.nouns[idx].hop_level
        for idx, kind in cot.slots
        if kind == SLOT_ANCHOR and 0 <= idx < len(parsed.nouns)
    ]
    for k in range(1, len(anchor_levels)):
        if anchor_levels[k] > anchor_levels[k - 1]:
            reasons.append(f"order: anchor hop levels increase at slot {k}")
    return TextVerdict(passed=not reasons, reasons=reasons)


def audit_checks(parsed: ParsedExpression, cot: CotAnswer, original_text: str,
                 lexicons: Optional[Lexicons] = None) -> dict[str, bool]:
    """Local deterministic audit: anchor coverage and hop-level correctness,
    both recomputed against the rules lexicon."""
    tokens = tokenize(original_text)
    try:
        reference = rules_parse(tokens, parsed.expression_id, lexicons)
    except StageError:
        return {"anchor_coverage": False, "hop_correctness": False}

    ref_spans = {(n.span_start, n.span_end): n.hop_level for n in reference.nouns}
    got_spans = {(n.span_start, n.span_end): n.hop_level for n in parsed.nouns}
    slot_indices = {idx for idx, _ in cot.slots}
    anchor_coverage = (
        set(ref_spans) == set(got_spans)
        and slot_indices == set(range(len(parsed.nouns)))
    )
    common = set(ref_spans) & set(got_spans)
    hop_correctness = bool(common) and all(ref_spans[s] == got_spans[s] for s in common)
    return {"anchor_coverage": anchor_coverage, "hop_correctness": hop_correctness}
