"""Box-point grounding representation and the adaptive weighted loss reference.

A grounding target is one bounding box normalized to [0,1000] plus Yes/No
labels for points sampled inside the box, serialized as
``[x_min, y_min, x_max, y_max], Yes,Yes,No`` (4 + k tokens for k points; the
main configuration uses k = 15 for 19 tokens). The one-token-per-coordinate
property is a documented assumption about downstream tokenizers and is checked
here only as string-field counts.

Loss functions take per-token cross-entropy values as inputs; no logits or
gradients are computed here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .geometry import point_in_mask
from .records import Box, GroundedSample, Mask

COORD_SCALE = 1000
GRID_SIDE = 5
DEFAULT_GRID_K = 15

MODE_TRAIN_RANDOM = "train_random"
MODE_INFER_GRID = "infer_grid"

_PROMPT_RE = re.compile(
    r"^\[(-?\d+), (-?\d+), (-?\d+), (-?\d+)\](?:, ((?:Yes|No)(?:,(?:Yes|No))*))?$"
)


@dataclass
class BoxPointPrompt:
    normalized_box: list[int]  # 4 ints in [0, 1000]
    points: list[tuple[float, float]]  # pixel coordinates
    point_labels: list[bool]

    def violations(self) -> list[str]:
        out = []
        if len(self.normalized_box) != 4:
            out.append("BoxPointPrompt: normalized_box must have 4 coordinates")
        if any(not 0 <= c <= COORD_SCALE for c in self.normalized_box):
            out.append("BoxPointPrompt: coordinate outside [0,1000]")
        if len(self.points) != len(self.point_labels):
            out.append("BoxPointPrompt: points/labels length mismatch")
        return out

    def token_count(self) -> int:
        return 4 + len(self.point_labels)


def normalize_box(b: Box, width: float, height: float) -> list[int]:
    """Map pixel coordinates onto the [0,1000] integer grid per axis."""
    if width <= 0 or height <= 0:
        raise ValueError(f"image extent must be positive, got {width}x{height}")

    def enc(c: float, extent: float) -> int:
        return int(min(max(round(COORD_SCALE * c / extent), 0), COORD_SCALE))

    return [enc(b.x_min, width), enc(b.y_min, height),
            enc(b.x_max, width), enc(b.y_max, height)]


def denormalize_box(coords: list[int], width: float, height: float) -> Box:
    if width <= 0 or height <= 0:
        raise ValueError(f"image extent must be positive, got {width}x{height}")
    a, b, c, d = coords
    return Box(a * width / COORD_SCALE, b * height / COORD_SCALE,
               c * width / COORD_SCALE, d * height / COORD_SCALE)


def _grid_points(box: Box) -> list[tuple[float, float]]:
    """5x5 evenly spaced grid at fractional positions {1/6..5/6} of each axis,
    row-major order; no point touches the box boundary."""
    w = box.x_max - box.x_min
    h = box.y_max - box.y_min
    pts = []
    for row in range(1, GRID_SIDE + 1):
        for col in range(1, GRID_SIDE + 1):
            pts.append((box.x_min + w * col / (GRID_SIDE + 1),
                        box.y_min + h * row / (GRID_SIDE + 1)))
    return pts


def sample_points(box: Box, mode: str, k: int,
                  seed: Optional[int] = None) -> list[tuple[float, float]]:
    """Point sampling inside a box.

    train_random: k points uniform in the box from a seeded generator.
    infer_grid: deterministic center-outward selection of k of the 25 grid
    points (distance to box center, ties broken row-major); independent of
    seed unless `seed` requests the random-subset variant via k < 25.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if box.is_degenerate():
        raise ValueError("cannot sample points in a degenerate box")
    if mode == MODE_TRAIN_RANDOM:
        rng = np.random.default_rng(seed)
        xs = rng.uniform(box.x_min, box.x_max, size=k)
        ys = rng.uniform(box.y_min, box.y_max, size=k)
        return list(zip(xs.tolist(), ys.tolist()))
    if mode == MODE_INFER_GRID:
        if k > GRID_SIDE * GRID_SIDE:
            raise ValueError(f"infer_grid supports at most {GRID_SIDE * GRID_SIDE} points")
        pts = _grid_points(box)
        cx = (box.x_min + box.x_max) / 2
        cy = (box.y_min + box.y_max) / 2
        order = sorted(range(len(pts)),
                       key=lambda i: ((pts[i][0] - cx) ** 2 + (pts[i][1] - cy) ** 2, i))
        return [pts[i] for i in order[:k]]
    if mode == "infer_random_subset":
        # Seeded random draw from the 5x5 grid, for parity with randomized
        # point-count sweeps.
        if k > GRID_SIDE * GRID_SIDE:
            raise ValueError(f"grid subset supports at most {GRID_SIDE * GRID_SIDE} points")
        pts = _grid_points(box)
        rng = np.random.default_rng(seed)
        idx = sorted(rng.choice(len(pts), size=k, replace=False).tolist())
        return [pts[i] for i in idx]
    raise ValueError(f"unknown sampling mode {mode!r}")


def label_points(points: list[tuple[float, float]], target_mask: Mask) -> list[bool]:
    """Yes/No per point: does it land on target foreground."""
    return [point_in_mask(p, target_mask) for p in points]


def serialize_prompt(prompt: BoxPointPrompt) -> str:
    """Byte-exact format: `[a, b, c, d], L1,L2,...,Lk` with Yes/No labels."""
    problems = prompt.violations()
    if problems:
        raise ValueError("; ".join(problems))
    a, b, c, d = prompt.normalized_box
    head = f"[{a}, {b}, {c}, {d}]"
    if not prompt.point_labels:
        return head
    labels = ",".join("Yes" if lab else "No" for lab in prompt.point_labels)
    return f"{head}, {labels}"


def parse_prompt(s: str) -> BoxPointPrompt:
    """Inverse of serialize_prompt; point pixel coordinates are not part of the
    wire format and come back empty."""
    m = _PROMPT_RE.match(s)
    if m is None:
        bracket = s.find("]")
        raise ValueError(f"malformed box-point prompt near position {max(bracket, 0)}: {s!r}")
    coords = [int(m.group(i)) for i in range(1, 5)]
    labels_str = m.group(5)
    labels = [w == "Yes" for w in labels_str.split(",")] if labels_str else []
    prompt = BoxPointPrompt(normalized_box=coords, points=[(0.0, 0.0)] * len(labels),
                            point_labels=labels)
    problems = prompt.violations()
    if problems:
        raise ValueError("; ".join(problems))
    return prompt


def prompt_token_count(s: str) -> int:
    """Count of whitespace-or-comma-delimited tokens in a serialized prompt."""
    return len([t for t in re.split(r"[\s,]+", s.strip("[] ")) if t.strip("[]")])


@dataclass
class LossBreakdown:
    l_box: float
    l_points: float
    l_text: float
    weights: list[float]

    @property
    def total(self) -> float:
        return self.l_box + self.l_points + self.l_text

    def to_dict(self) -> dict[str, Any]:
        return {"l_box": self.l_box, "l_points": self.l_points,
                "l_text": self.l_text, "total": self.total,
                "weights": list(self.weights)}


def box_weights(n: int, fixed_target_weight: Optional[float] = None) -> list[float]:
    """Target-first weight vector: target weight n+1 (adaptive) or a fixed
    constant; anchors always weigh 1."""
    w0 = float(n + 1) if fixed_target_weight is None else float(fixed_target_weight)
    return [w0] + [1.0] * n


def adaptive_box_loss(per_box_ce: list[float], n: int,
                      fixed_target_weight: Optional[float] = None) -> float:
    """Weighted box loss over a target-first CE list of length n + 1."""
    if len(per_box_ce) != n + 1:
        raise ValueError(f"expected {n + 1} CE values (target first), got {len(per_box_ce)}")
    if any(ce < 0 for ce in per_box_ce):
        raise ValueError("CE values must be non-negative")
    weights = box_weights(n, fixed_target_weight)
    return float(sum(w * ce for w, ce in zip(weights, per_box_ce)))


def total_loss(box_ce: list[float], point_ce: list[float], text_ce: float, n: int,
               fixed_target_weight: Optional[float] = None) -> LossBreakdown:
    """Total training loss: weighted box term + unweighted point CE sum + text CE."""
    l_box = adaptive_box_loss(box_ce, n, fixed_target_weight)
    if any(ce < 0 for ce in point_ce) or text_ce < 0:
        raise ValueError("CE values must be non-negative")
    return LossBreakdown(
        l_box=l_box,
        l_points=float(sum(point_ce)),
        l_text=float(text_ce),
        weights=box_weights(n, fixed_target_weight),
    )


def sft_fields(sample: GroundedSample, config: Any = None) -> dict[str, Any]:
    """Box-point training fields added to each SFT record for the target box."""
    assert sample.parsed is not None and sample.boxes is not None
    k = getattr(config, "grid_k", DEFAULT_GRID_K) if config else DEFAULT_GRID_K
    expr = sample.expression
    target_box = sample.boxes[sample.parsed.target_indices[0]]
    normalized = normalize_box(target_box, expr.image_width, expr.image_height)
    points = sample_points(target_box, MODE_INFER_GRID, k)
    if expr.gt_mask is not None:
        labels = label_points(points, expr.gt_mask)
    else:
        labels = [True] * len(points)  # box-only ground truth: in-box is on-target
    prompt = BoxPointPrompt(normalized_box=normalized, points=points,
                            point_labels=labels)
    return {
        "normalized_box": normalized,
        "points": [[round(x, 2), round(y, 2)] for x, y in points],
        "point_labels": ["Yes" if lab else "No" for lab in labels],
        "prompt_string": serialize_prompt(prompt),
    }
