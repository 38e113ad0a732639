"""Per-noun box grounding (stage B.1) and dual verification (stage B.2):
a per-noun judge accept/reject plus the strict IoU_GT > 0.7 target filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .errors import GatewayError, StageError
from .geometry import box_iou, clip_box
from .records import (
    STATUS_FAILED,
    STATUS_GROUNDED,
    STATUS_TEXT_VALID,
    STATUS_VERIFIED,
    VERDICT_ACCEPT,
    VERDICT_REJECT,
    VERDICT_UNCHECKED,
    Box,
    CotAnswer,
    Expression,
    GroundedSample,
    ParsedExpression,
)

STAGE_B1 = "B1"
STAGE_B2 = "B2"

IOU_GT_THRESHOLD = 0.7
DEFAULT_CONTEXT_RADIUS = 3


def context_window(tokens: list[str], span_start: int, span_end: int,
                   radius: int = DEFAULT_CONTEXT_RADIUS) -> str:
    """Noun span plus `radius` tokens either side, used as grounding context."""
    lo = max(0, span_start - radius)
    hi = min(len(tokens), span_end + radius)
    return " ".join(tokens[lo:hi])


def ground(parsed: ParsedExpression, cot: CotAnswer, expression: Expression,
           gateway: Any, context_radius: int = DEFAULT_CONTEXT_RADIUS) -> GroundedSample:
    """Stage B.1: one clipped box + confidence per noun via the grounding role."""
    payload = {
        "task": "ground",
        "expression_id": expression.id,
        "sentence": expression.text,
        "image_uri": expression.image_uri,
        "image_width": expression.image_width,
        "image_height": expression.image_height,
        "nouns": [
            {
                "index": i,
                "text": n.text,
                "level": n.hop_level,
                "context": context_window(expression.tokens, n.span_start,
                                          n.span_end, context_radius),
            }
            for i, n in enumerate(parsed.nouns)
        ],
    }
    response = gateway.call("ground_vlm", payload)
    entries = response["noun_bboxes"]
    if len(entries) != len(parsed.nouns):
        raise StageError(STAGE_B1,
                         f"{len(entries)} box entries for {len(parsed.nouns)} nouns",
                         raw=str(response))
    by_index = {int(e["noun_index"]): e for e in entries}
    if sorted(by_index) != list(range(len(parsed.nouns))):
        raise StageError(STAGE_B1, "noun indices do not cover 0..n-1",
                         raw=str(response))
    boxes: list[Box] = []
    confidences: list[float] = []
    for i in range(len(parsed.nouns)):
        entry = by_index[i]
        conf = float(entry["confidence"])
        if not 0.0 <= conf <= 1.0:
            raise StageError(STAGE_B1, f"confidence {conf} outside [0,1] for noun {i}")
        raw_box = Box.from_list(entry["bbox_xyxy"])
        if raw_box.violations():
            raise StageError(STAGE_B1, f"inverted box for noun {i}")
        clipped = clip_box(raw_box, expression.image_width, expression.image_height)
        if clipped.is_degenerate():
            raise StageError(STAGE_B1, "degenerate box")
        boxes.append(clipped)
        confidences.append(conf)
    return GroundedSample(
        expression=expression,
        parsed=parsed,
        cot=cot,
        boxes=boxes,
        confidences=confidences,
        judge_verdicts=[VERDICT_UNCHECKED] * len(parsed.nouns),
        status=STATUS_GROUNDED,
    )


def verify(sample: GroundedSample, gateway: Any,
           iou_threshold: float = IOU_GT_THRESHOLD) -> GroundedSample:
    """Stage B.2: verified iff every judge verdict is accept AND the target box
    beats the ground-truth IoU threshold strictly. Judge unavailability leaves
    the sample pending with retry metadata rather than failing it."""
    if sample.status != STATUS_GROUNDED:
        raise ValueError(f"verify expects a grounded sample, got {sample.status!r}")
    assert sample.parsed is not None and sample.boxes is not None
    expression = sample.expression
    target_idx = sample.parsed.target_indices[0]
    sample.target_iou_gt = box_iou(sample.boxes[target_idx], expression.gt_box)

    verdicts: list[str] = []
    for i, noun in enumerate(sample.parsed.nouns):
        payload = {
            "task": "judge",
            "expression_id": expression.id,
            "image_uri": expression.image_uri,
            "noun_index": i,
            "noun_text": noun.text,
            "box": sample.boxes[i].to_list(),
        }
        try:
            response = gateway.call("judge_vlm", payload)
        except GatewayError as exc:
            if exc.retryable:
                sample.judge_verdicts = verdicts + [VERDICT_UNCHECKED] * (
                    len(sample.parsed.nouns) - len(verdicts))
                sample.failed_reason = f"judge unavailable at noun {i}: retry pending"
                return sample  # still grounded; resumable
            raise
        verdicts.append(response["verdict"])
    sample.judge_verdicts = verdicts

    tripped = []
    if not sample.target_iou_gt > iou_threshold:
        tripped.append(f"iou_gt {sample.target_iou_gt:.4f} <= {iou_threshold}")
    rejected = [i for i, v in enumerate(verdicts) if v != VERDICT_ACCEPT]
    if rejected:
        tripped.append(f"judge rejected nouns {rejected}")
    if tripped:
        return sample.fail(STAGE_B2, "; ".join(tripped))
    sample.status = STATUS_VERIFIED
    return sample


@dataclass
class PassRateReport:
    """Stage-wise pass counts and ratios. Ratios come from counted outcomes,
    never from products of sub-rates; visual denominators are the samples that
    entered stage B."""

    text_entered: int = 0
    text_passed: int = 0
    visual_entered: int = 0
    visual_passed: int = 0
    iou_filter_passed: int = 0
    judge_passed: int = 0
    zero_denominators: bool = False

    def __add__(self, other: "PassRateReport") -> "PassRateReport":
        return PassRateReport(
            text_entered=self.text_entered + other.text_entered,
            text_passed=self.text_passed + other.text_passed,
            visual_entered=self.visual_entered + other.visual_entered,
            visual_passed=self.visual_passed + other.visual_passed,
            iou_filter_passed=self.iou_filter_passed + other.iou_filter_passed,
            judge_passed=self.judge_passed + other.judge_passed,
        )

    def ratios(self) -> dict[str, Optional[float]]:
        def div(num: int, den: int) -> Optional[float]:
            return num / den if den else None

        return {
            "text_pass": div(self.text_passed, self.text_entered),
            "visual_pass": div(self.visual_passed, self.visual_entered),
            "iou_filter_pass": div(self.iou_filter_passed, self.visual_entered),
            "judge_pass": div(self.judge_passed, self.visual_entered),
        }

    def to_dict(self) -> dict[str, Any]:
        counts = {
            "text_entered": self.text_entered,
            "text_passed": self.text_passed,
            "visual_entered": self.visual_entered,
            "visual_passed": self.visual_passed,
            "iou_filter_passed": self.iou_filter_passed,
            "judge_passed": self.judge_passed,
        }
        return {"counts": counts, "ratios": self.ratios(),
                "zero_denominators": self.zero_denominators}


def pass_rate_report(samples: list[GroundedSample],
                     iou_threshold: float = IOU_GT_THRESHOLD) -> PassRateReport:
    """Count stage outcomes over one pipeline run's final samples."""
    report = PassRateReport()
    for s in samples:
        # Every sample that reached A.3 (passed A.1/A.2) counts toward text rates.
        reached_a3 = s.parsed is not None and s.cot is not None and not (
            s.status == STATUS_FAILED and s.failed_stage in ("A1", "A2"))
        if reached_a3:
            report.text_entered += 1
            failed_text = s.status == STATUS_FAILED and s.failed_stage == "A3"
            if not failed_text:
                report.text_passed += 1
            else:
                continue
        else:
            continue
        entered_b = s.boxes is not None or (
            s.status == STATUS_FAILED and s.failed_stage in (STAGE_B1, STAGE_B2))
        if not entered_b:
            continue
        report.visual_entered += 1
        if s.status == STATUS_FAILED and s.failed_stage == STAGE_B1:
            continue
        iou_ok = s.target_iou_gt is not None and s.target_iou_gt > iou_threshold
        judge_ok = bool(s.judge_verdicts) and all(
            v == VERDICT_ACCEPT for v in s.judge_verdicts)
        if iou_ok:
            report.iou_filter_passed += 1
        if judge_ok:
            report.judge_passed += 1
        if iou_ok and judge_ok:
            report.visual_passed += 1
    if report.text_entered == 0 or report.visual_entered == 0:
        report.zero_denominators = True
    return report
