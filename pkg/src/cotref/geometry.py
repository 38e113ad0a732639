"""Box and mask arithmetic: IoU, clipping, RLE codec, point-in-mask tests.

Box IoU is continuous-area geometry (pipeline thresholds apply to box
predictions in continuous coordinates); mask IoU is exact pixel counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .records import Box, Mask


@dataclass
class IouResult:
    value: float
    degenerate: bool = False
    empty_empty: bool = False


def box_iou(a: Box, b: Box, diagnostics: Optional[dict] = None) -> float:
    """Continuous-area intersection over union. Both-degenerate input yields 0.0
    and sets the `degenerate` diagnostic flag."""
    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(0.0, inter_w) * max(0.0, inter_h)
    union = a.area() + b.area() - inter
    if union == 0.0:
        if diagnostics is not None:
            diagnostics["degenerate"] = True
        return 0.0
    return inter / union


def clip_box(b: Box, width: float, height: float, diagnostics: Optional[dict] = None) -> Box:
    """Clamp box coordinates to [0,width]x[0,height]; idempotent."""
    if width <= 0 or height <= 0:
        raise ValueError(f"image bounds must be positive, got {width}x{height}")
    clipped = Box(
        x_min=min(max(b.x_min, 0.0), float(width)),
        y_min=min(max(b.y_min, 0.0), float(height)),
        x_max=min(max(b.x_max, 0.0), float(width)),
        y_max=min(max(b.y_max, 0.0), float(height)),
    )
    if diagnostics is not None and clipped.is_degenerate() and not b.is_degenerate():
        diagnostics["clipped_to_empty"] = True
    return clipped


def rle_decode(counts: list[int], width: int, height: int) -> np.ndarray:
    """Decode COCO-style column-major RLE counts into an (height, width) bool grid."""
    total = sum(counts)
    if total != width * height:
        raise ValueError(f"RLE counts sum to {total}, expected {width * height}")
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos:pos + c] = True
        pos += c
        value = not value
    # column-major: index = x * height + y
    return flat.reshape((width, height)).T.copy()


def rle_encode(grid: np.ndarray) -> list[int]:
    """Encode an (height, width) bool grid as canonical column-major RLE counts.

    Canonical form starts with a (possibly zero) background run and has no
    interior zero runs.
    """
    height, width = grid.shape
    flat = grid.T.reshape(-1)
    counts: list[int] = []
    value = False
    run = 0
    for bit in flat:
        if bool(bit) == value:
            run += 1
        else:
            counts.append(run)
            value = bool(bit)
            run = 1
    counts.append(run)
    if not counts:
        counts = [width * height]
    return counts


def mask_to_grid(m: Mask) -> np.ndarray:
    return rle_decode(m.counts, m.width, m.height)


def grid_to_mask(grid: np.ndarray) -> Mask:
    height, width = grid.shape
    return Mask(width=width, height=height, counts=rle_encode(grid))


def mask_iou(a: Mask, b: Mask, diagnostics: Optional[dict] = None) -> float:
    """Pixel-count IoU. Empty vs empty is 1.0 by convention (both predict
    nothing) and sets the `empty_empty` diagnostic flag."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"mask dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    ga, gb = mask_to_grid(a), mask_to_grid(b)
    inter = int(np.logical_and(ga, gb).sum())
    union = int(np.logical_or(ga, gb).sum())
    if union == 0:
        if diagnostics is not None:
            diagnostics["empty_empty"] = True
        return 1.0
    return inter / union


def mask_inter_union(a: Mask, b: Mask) -> tuple[int, int]:
    """Raw (intersection, union) pixel counts, for cumulative-IoU accumulation."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"mask dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    ga, gb = mask_to_grid(a), mask_to_grid(b)
    return int(np.logical_and(ga, gb).sum()), int(np.logical_or(ga, gb).sum())


def point_in_mask(p: tuple[float, float], m: Mask, diagnostics: Optional[dict] = None) -> bool:
    """True iff the pixel containing p (floor-to-pixel) is foreground."""
    x, y = int(np.floor(p[0])), int(np.floor(p[1]))
    if not (0 <= x < m.width and 0 <= y < m.height):
        if diagnostics is not None:
            diagnostics["out_of_bounds"] = True
        return False
    return bool(mask_to_grid(m)[y, x])


def polygon_to_grid(polygons: list[list[float]], width: int, height: int) -> np.ndarray:
    """Rasterize COCO polygon segmentation (flat [x0,y0,x1,y1,...] lists) with
    even-odd fill sampled at integer pixel centers."""
    grid = np.zeros((height, width), dtype=bool)
    xs_c = np.arange(width) + 0.5
    for poly in polygons:
        pts = np.asarray(poly, dtype=float).reshape(-1, 2)
        if len(pts) < 3:
            continue
        x0, x1 = pts[:, 0], np.roll(pts[:, 0], -1)
        y0, y1 = pts[:, 1], np.roll(pts[:, 1], -1)
        for row in range(height):
            yc = row + 0.5
            crosses = (y0 <= yc) != (y1 <= yc)
            if not crosses.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = x0[crosses] + (yc - y0[crosses]) * (x1[crosses] - x0[crosses]) / (
                    y1[crosses] - y0[crosses]
                )
            inside = (xs_c[:, None] < x_at[None, :]).sum(axis=1) % 2 == 1
            grid[row] ^= inside
    return grid


def shoelace_area(polygon: list[float]) -> float:
    pts = np.asarray(polygon, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
