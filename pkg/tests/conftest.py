from __future__ import annotations

import os

import numpy as np
import pytest

from cotref.records import (
    STATUS_VERIFIED,
    VERDICT_ACCEPT,
    Box,
    CotAnswer,
    Expression,
    GroundedSample,
    ParsedExpression,
    ParsedNoun,
)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(REPO_ROOT, "fixtures")

CORPUS_PATH = os.path.join(FIXTURES, "corpus_expressions.jsonl")
MOCK_FIXTURES_PATH = os.path.join(FIXTURES, "mock_fixtures.json")
EXCLUSION_PATH = os.path.join(FIXTURES, "exclusion_list.txt")


@pytest.fixture
def corpus_path() -> str:
    return CORPUS_PATH


def brute_force_mask_iou(ga: np.ndarray, gb: np.ndarray) -> float:
    """Per-pixel loop oracle, independent of the vectorized implementation."""
    inter = union = 0
    h, w = ga.shape
    for y in range(h):
        for x in range(w):
            a, b = bool(ga[y, x]), bool(gb[y, x])
            if a and b:
                inter += 1
            if a or b:
                union += 1
    return 1.0 if union == 0 else inter / union


def brute_force_inter_union(ga: np.ndarray, gb: np.ndarray) -> tuple[int, int]:
    inter = union = 0
    h, w = ga.shape
    for y in range(h):
        for x in range(w):
            a, b = bool(ga[y, x]), bool(gb[y, x])
            inter += a and b
            union += a or b
    return inter, union


def closed_form_box_iou(a: list[float], b: list[float]) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = max(0.0, iw) * max(0.0, ih)
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    union = area_a + area_b - inter
    return 0.0 if union == 0 else inter / union


def lamp_vase_table_book_parse() -> ParsedExpression:
    """The appendix example: 'Between the lamp and the vase on the table is
    the book'; lamp/vase level 1, table level 2, book target."""
    return ParsedExpression(
        expression_id="lamp_vase",
        nouns=[
            ParsedNoun(text="lamp", span_start=2, span_end=3, hop_level=1),
            ParsedNoun(text="vase", span_start=6, span_end=7, hop_level=1),
            ParsedNoun(text="table", span_start=9, span_end=10, hop_level=2),
            ParsedNoun(text="book", span_start=12, span_end=13, hop_level=0),
        ],
        target_indices=[3],
    )


def make_sample(expr_id: str = "s1", image_id: str = "img1", split: str = "val",
                l_max_reported: int = 3, anchors: int | None = None,
                status: str = STATUS_VERIFIED, n_tokens: int | None = None,
                target_iou: float = 1.0) -> GroundedSample:
    """Synthetic sample with a hop chain of the requested reported L_max and
    anchor count (anchors >= l_max - 1; extras share the deepest level)."""
    depth = l_max_reported - 1
    if anchors is None:
        anchors = depth
    assert anchors >= depth, "need at least one anchor per hop level"
    levels = [0] + list(range(1, depth + 1)) + [depth] * (anchors - depth)
    if n_tokens is None:
        n_tokens = len(levels)
    assert n_tokens >= len(levels)
    tokens = [f"w{i}" for i in range(n_tokens)]
    nouns = [
        ParsedNoun(text=tokens[i], span_start=i, span_end=i + 1, hop_level=lvl)
        for i, lvl in enumerate(levels)
    ]
    parsed = ParsedExpression(expression_id=expr_id, nouns=nouns,
                              target_indices=[0])
    order = sorted(range(1, len(nouns)), key=lambda i: (-levels[i], i)) + [0]
    slots = [(i, "target" if i == 0 else "anchor") for i in order]
    cot = CotAnswer(answer_text=" ".join("[LOC]" for _ in slots), slots=slots)
    gt = Box(10, 10, 50, 50)
    expr = Expression(
        id=expr_id, image_id=image_id, image_width=100, image_height=100,
        text=" ".join(tokens), tokens=tokens, split=split, gt_box=gt,
    )
    return GroundedSample(
        expression=expr, parsed=parsed, cot=cot,
        boxes=[gt] + [Box(60, 60, 90, 90)] * anchors,
        confidences=[0.9] * (anchors + 1),
        judge_verdicts=[VERDICT_ACCEPT] * (anchors + 1),
        target_iou_gt=target_iou,
        status=status,
    )
