"""REC/RES scoring: cumulative IoU, generalized IoU, mean box IoU, with
stratified reporting over hop-level and anchor-count buckets.

cIoU is summed intersections over summed unions across samples; gIoU is the
mean of per-sample mask IoUs. Empty-vs-empty mask pairs are flagged, excluded
from the sums, and reported separately. The report's overall average is the
mean over all records, not the mean of bucket means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .benchmark import ANCHOR_BUCKETS, HOP_BUCKETS, StrataKey
from .geometry import box_iou, mask_inter_union, mask_iou
from .records import Box, Mask


@dataclass
class EvalRecord:
    """One scored prediction joined against its ground truth."""

    expression_id: str
    strata: StrataKey
    pred_box: Optional[Box] = None
    gt_box: Optional[Box] = None
    pred_mask: Optional[Mask] = None
    gt_mask: Optional[Mask] = None


def giou(pairs: list[tuple[Mask, Mask]]) -> float:
    """Mean of per-sample mask IoU."""
    if not pairs:
        raise ValueError("giou requires at least one mask pair")
    return sum(mask_iou(p, g) for p, g in pairs) / len(pairs)


def ciou(pairs: list[tuple[Mask, Mask]],
         diagnostics: Optional[dict] = None) -> float:
    """Cumulative IoU: summed per-sample intersections over summed unions.
    Empty-vs-empty pairs are excluded from the sums and counted separately."""
    if not pairs:
        raise ValueError("ciou requires at least one mask pair")
    inter_sum = union_sum = 0
    empty_empty = 0
    for p, g in pairs:
        inter, union = mask_inter_union(p, g)
        if union == 0:
            empty_empty += 1
            continue
        inter_sum += inter
        union_sum += union
    if diagnostics is not None:
        diagnostics["empty_empty_pairs"] = empty_empty
    if union_sum == 0:
        if diagnostics is not None:
            diagnostics["all_pairs_empty"] = True
        return 1.0
    return inter_sum / union_sum


def iou_at_box(pairs: list[tuple[Box, Box]]) -> float:
    """Mean box IoU over pairs."""
    if not pairs:
        raise ValueError("iou_at_box requires at least one box pair")
    return sum(box_iou(p, g) for p, g in pairs) / len(pairs)


_EMPTY_MASK_CACHE: dict[tuple[int, int], Mask] = {}


def _empty_mask(width: int, height: int) -> Mask:
    key = (width, height)
    if key not in _EMPTY_MASK_CACHE:
        _EMPTY_MASK_CACHE[key] = Mask(width=width, height=height,
                                      counts=[width * height])
    return _EMPTY_MASK_CACHE[key]


def _record_metrics(r: EvalRecord) -> dict[str, Any]:
    """Per-record raw terms. Missing predictions score 0 against their gt."""
    out: dict[str, Any] = {}
    if r.gt_box is not None:
        pred = r.pred_box if r.pred_box is not None else Box(0, 0, 0, 0)
        out["box_iou"] = box_iou(pred, r.gt_box)
    if r.gt_mask is not None:
        pred_mask = r.pred_mask if r.pred_mask is not None else _empty_mask(
            r.gt_mask.width, r.gt_mask.height)
        inter, union = mask_inter_union(pred_mask, r.gt_mask)
        out["mask_inter"] = inter
        out["mask_union"] = union
        out["mask_iou"] = 1.0 if union == 0 else inter / union
        out["empty_empty"] = union == 0
    return out


@dataclass
class _Agg:
    n_box: int = 0
    box_iou_sum: float = 0.0
    n_mask: int = 0
    mask_iou_sum: float = 0.0
    inter_sum: int = 0
    union_sum: int = 0
    empty_empty: int = 0

    def add(self, m: dict[str, Any]) -> None:
        if "box_iou" in m:
            self.n_box += 1
            self.box_iou_sum += m["box_iou"]
        if "mask_iou" in m:
            if m["empty_empty"]:
                self.empty_empty += 1
            else:
                self.inter_sum += m["mask_inter"]
                self.union_sum += m["mask_union"]
            self.n_mask += 1
            self.mask_iou_sum += m["mask_iou"]

    def summary(self) -> dict[str, Any]:
        out: dict[str, Any] = {"count": max(self.n_box, self.n_mask)}
        if self.n_box:
            out["iou_at_box"] = self.box_iou_sum / self.n_box
        if self.n_mask:
            out["giou"] = self.mask_iou_sum / self.n_mask
            out["ciou"] = (self.inter_sum / self.union_sum
                           if self.union_sum else 1.0)
            if self.empty_empty:
                out["empty_empty_pairs"] = self.empty_empty
        return out


def stratified_report(records: list[EvalRecord]) -> dict[str, Any]:
    """Per-bucket metrics for the hop-level and anchor-count axes independently
    (each record contributes to one bucket per axis) plus the dataset-wide
    average. Empty buckets are absent from the table."""
    if not records:
        raise ValueError("stratified_report requires at least one record")
    overall = _Agg()
    by_hop: dict[str, _Agg] = {}
    by_anchor: dict[str, _Agg] = {}
    for r in records:
        m = _record_metrics(r)
        overall.add(m)
        by_hop.setdefault(r.strata.hop_bucket, _Agg()).add(m)
        by_anchor.setdefault(r.strata.anchor_bucket, _Agg()).add(m)
    return {
        "overall": overall.summary(),
        "by_hop_bucket": {b: by_hop[b].summary() for b in HOP_BUCKETS if b in by_hop},
        "by_anchor_bucket": {b: by_anchor[b].summary()
                             for b in ANCHOR_BUCKETS if b in by_anchor},
        "average_definition": "mean over all records, not mean of bucket means",
    }


def join_predictions(gt_records: Iterable[dict[str, Any]],
                     predictions: dict[str, dict[str, Any]]) -> list[EvalRecord]:
    """Join benchmark ground truth with a predictions table keyed by expression
    id. Prediction entries may carry `box` (xyxy) and/or `mask` (RLE dict);
    missing predictions score 0 and are still counted."""
    out = []
    for rec in gt_records:
        expr = rec["expression"]
        strata = rec.get("strata") or {}
        key = StrataKey(hop_bucket=strata.get("hop_bucket", "3"),
                        anchor_bucket=strata.get("anchor_bucket", "3"))
        pred = predictions.get(expr["id"], {})
        out.append(EvalRecord(
            expression_id=expr["id"],
            strata=key,
            pred_box=Box.from_list(pred["box"]) if pred.get("box") else None,
            gt_box=Box.from_list(expr["gt_box"]),
            pred_mask=Mask.from_dict(pred["mask"]) if pred.get("mask") else None,
            gt_mask=Mask.from_dict(expr["gt_mask"]) if expr.get("gt_mask") else None,
        ))
    return out
