"""Ingestion of refCOCO-style annotation files into Expression JSONL.

Source layout: an instances file (`images` + `annotations`, COCO bbox xywh and
segmentation as polygons or uncompressed RLE) and a refs file (one entry per
referring annotation with its sentences and split). One Expression is emitted
per (sentence, annotation) pair; images are referenced by path, never inlined.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from .geometry import grid_to_mask, polygon_to_grid
from .records import Box, Expression, Mask, normalize_text, tokenize


@dataclass
class IngestReport:
    expressions: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (ref id, reason)

    def to_dict(self) -> dict[str, Any]:
        return {"expressions": self.expressions,
                "skipped": [list(s) for s in self.skipped]}


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed annotation file {path}: line {exc.lineno} "
                         f"column {exc.colno}") from exc


def segmentation_to_mask(segmentation: Any, width: int, height: int) -> Optional[Mask]:
    if segmentation is None:
        return None
    if isinstance(segmentation, dict):
        h, w = segmentation["size"]
        return Mask(width=w, height=h, counts=[int(c) for c in segmentation["counts"]])
    if isinstance(segmentation, list):
        grid = polygon_to_grid(segmentation, width, height)
        return grid_to_mask(grid)
    raise ValueError(f"unsupported segmentation payload: {type(segmentation)}")


def ingest(refs_path: str, instances_path: str,
           image_root: Optional[str] = None) -> tuple[list[Expression], IngestReport]:
    """Build one Expression per (sentence, annotation) pair, split preserved.
    Dangling annotation ids are skipped and counted; malformed files abort."""
    instances = _load_json(instances_path)
    refs = _load_json(refs_path)

    images = {img["id"]: img for img in instances.get("images", [])}
    annotations = {ann["id"]: ann for ann in instances.get("annotations", [])}

    report = IngestReport()
    expressions: list[Expression] = []
    for ref in refs:
        ref_id = str(ref.get("ref_id", "?"))
        ann = annotations.get(ref.get("ann_id"))
        if ann is None:
            report.skipped.append((ref_id, f"dangling annotation id {ref.get('ann_id')}"))
            continue
        img = images.get(ref.get("image_id", ann.get("image_id")))
        if img is None:
            report.skipped.append((ref_id, f"unknown image id {ref.get('image_id')}"))
            continue
        width, height = int(img["width"]), int(img["height"])
        x, y, w, h = ann["bbox"]
        gt_box = Box(
            x_min=max(0.0, float(x)),
            y_min=max(0.0, float(y)),
            x_max=min(float(width), float(x) + float(w)),
            y_max=min(float(height), float(y) + float(h)),
        )
        gt_mask = segmentation_to_mask(ann.get("segmentation"), width, height)
        uri = None
        if img.get("file_name"):
            uri = (os.path.join(image_root, img["file_name"])
                   if image_root else img["file_name"])
        for k, sentence in enumerate(ref.get("sentences", [])):
            raw = sentence["sent"] if isinstance(sentence, dict) else str(sentence)
            text = normalize_text(raw)
            expressions.append(Expression(
                id=f"{ref_id}_{k}",
                image_id=str(img["id"]),
                image_width=width,
                image_height=height,
                text=text,
                tokens=tokenize(raw),
                split=ref.get("split", "train"),
                gt_box=gt_box,
                gt_mask=gt_mask,
                image_uri=uri,
            ))
            report.expressions += 1
    return expressions, report
