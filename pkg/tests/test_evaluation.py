from __future__ import annotations

import numpy as np
import pytest

from cotref.benchmark import StrataKey
from cotref.evaluation import (
    EvalRecord,
    ciou,
    giou,
    iou_at_box,
    join_predictions,
    stratified_report,
)
from cotref.geometry import grid_to_mask
from cotref.records import Box, Mask

from conftest import (
    brute_force_inter_union,
    brute_force_mask_iou,
    closed_form_box_iou,
)


def _random_mask_pairs(n, rng, shape=(12, 9)):
    pairs, grids = [], []
    for _ in range(n):
        ga = rng.random(shape) < rng.uniform(0.1, 0.8)
        gb = rng.random(shape) < rng.uniform(0.1, 0.8)
        pairs.append((grid_to_mask(ga), grid_to_mask(gb)))
        grids.append((ga, gb))
    return pairs, grids


def test_giou_and_ciou_match_pixel_oracle():
    rng = np.random.default_rng(21)
    pairs, grids = _random_mask_pairs(20, rng)
    expected_g = sum(brute_force_mask_iou(a, b) for a, b in grids) / len(grids)
    inter = sum(brute_force_inter_union(a, b)[0] for a, b in grids)
    union = sum(brute_force_inter_union(a, b)[1] for a, b in grids)
    assert giou(pairs) == pytest.approx(expected_g, abs=1e-12)
    assert ciou(pairs) == pytest.approx(inter / union, abs=1e-12)


def test_ciou_giou_divergence_case():
    # pair 1: pred 2 pixels, gt 1 of them  -> IoU 1/2 (inter 1, union 2)
    # pair 2: pred empty, gt 1 pixel       -> IoU 0   (inter 0, union 1)
    # cIoU = (1+0)/(2+1) = 1/3 ; gIoU = (1/2 + 0)/2 = 1/4
    g = np.zeros((1, 3), dtype=bool)
    pred1 = g.copy(); pred1[0, :2] = True
    gt1 = g.copy(); gt1[0, 0] = True
    pred2 = g.copy()
    gt2 = g.copy(); gt2[0, 1] = True
    pairs = [(grid_to_mask(pred1), grid_to_mask(gt1)),
             (grid_to_mask(pred2), grid_to_mask(gt2))]
    assert ciou(pairs) == 1 / 3
    assert giou(pairs) == 1 / 4


def test_single_pair_ciou_equals_giou():
    rng = np.random.default_rng(5)
    pairs, _ = _random_mask_pairs(1, rng)
    assert ciou(pairs) == pytest.approx(giou(pairs), abs=1e-12)


def test_empty_empty_pairs_flagged_and_excluded():
    empty = Mask(width=4, height=4, counts=[16])
    full = Mask(width=4, height=4, counts=[0, 16])
    diag = {}
    value = ciou([(empty, empty), (full, full)], diagnostics=diag)
    assert value == 1.0
    assert diag["empty_empty_pairs"] == 1

    diag = {}
    assert ciou([(empty, empty)], diagnostics=diag) == 1.0
    assert diag["all_pairs_empty"] is True
    # giou keeps the 1.0 convention for empty-empty
    assert giou([(empty, empty)]) == 1.0


def test_iou_at_box_matches_closed_form():
    rng = np.random.default_rng(33)
    pairs = []
    total = 0.0
    for _ in range(50):
        vals = rng.uniform(0, 100, size=8)
        a = Box(min(vals[0], vals[1]), min(vals[2], vals[3]),
                max(vals[0], vals[1]), max(vals[2], vals[3]))
        b = Box(min(vals[4], vals[5]), min(vals[6], vals[7]),
                max(vals[4], vals[5]), max(vals[6], vals[7]))
        pairs.append((a, b))
        total += closed_form_box_iou(a.to_list(), b.to_list())
    assert iou_at_box(pairs) == pytest.approx(total / 50, abs=1e-12)


def test_metrics_reject_empty_input():
    for fn in (giou, ciou, iou_at_box):
        with pytest.raises(ValueError):
            fn([])


def test_removing_true_positive_pixels_never_helps():
    gt = np.zeros((6, 6), dtype=bool)
    gt[1:5, 1:5] = True
    pred = gt.copy()
    prev = 1.0
    for k in range(1, 5):
        shrunk = gt.copy()
        shrunk[1:1 + k, :] = False
        value = giou([(grid_to_mask(shrunk), grid_to_mask(gt))])
        assert value <= prev
        prev = value


def _record(i, hop, anchor, iou_frac):
    """gt box (0,0,10,10); pred covers iou_frac of it exactly."""
    pred = Box(0, 0, 10, 10 * iou_frac) if iou_frac else None
    gt_grid = np.zeros((10, 10), dtype=bool)
    gt_grid[:, :] = True
    pred_grid = np.zeros((10, 10), dtype=bool)
    pred_grid[: int(10 * iou_frac), :] = True
    return EvalRecord(
        expression_id=f"r{i}",
        strata=StrataKey(hop_bucket=hop, anchor_bucket=anchor),
        pred_box=pred,
        gt_box=Box(0, 0, 10, 10),
        pred_mask=grid_to_mask(pred_grid),
        gt_mask=grid_to_mask(gt_grid),
    )


def test_stratified_report_group_by_oracle():
    records = [
        _record(0, "3", "3", 1.0),
        _record(1, "3", "4", 0.5),
        _record(2, "4", "3", 0.8),
        _record(3, "5plus", "5plus", 0.2),
    ]
    report = stratified_report(records)
    overall = report["overall"]
    assert overall["count"] == 4
    assert overall["giou"] == pytest.approx((1.0 + 0.5 + 0.8 + 0.2) / 4)
    # cIoU: inter = 100+50+80+20, union = 100 each
    assert overall["ciou"] == pytest.approx(250 / 400)
    assert report["by_hop_bucket"]["3"]["count"] == 2
    assert report["by_hop_bucket"]["3"]["giou"] == pytest.approx(0.75)
    assert report["by_hop_bucket"]["4"]["giou"] == pytest.approx(0.8)
    assert report["by_anchor_bucket"]["5plus"]["count"] == 1
    assert "2" not in report["by_hop_bucket"]
    assert report["average_definition"] == (
        "mean over all records, not mean of bucket means")


def test_overall_average_is_record_mean_not_bucket_mean():
    records = [_record(0, "3", "3", 1.0), _record(1, "3", "3", 1.0),
               _record(2, "3", "3", 1.0), _record(3, "4", "3", 0.0)]
    report = stratified_report(records)
    assert report["overall"]["giou"] == pytest.approx(0.75)  # not (1.0 + 0)/2


def test_missing_prediction_scores_zero():
    r = _record(0, "3", "3", 0.5)
    r.pred_box = None
    r.pred_mask = None
    report = stratified_report([r])
    assert report["overall"]["iou_at_box"] == 0.0
    assert report["overall"]["giou"] == 0.0


def test_stratified_report_single_record_and_empty():
    report = stratified_report([_record(0, "4", "4", 0.6)])
    assert report["overall"]["count"] == 1
    assert report["overall"]["giou"] == pytest.approx(0.6)
    with pytest.raises(ValueError):
        stratified_report([])


def test_join_predictions():
    gt_records = [{
        "expression": {
            "id": "e1", "gt_box": [0, 0, 10, 10],
            "gt_mask": {"width": 4, "height": 4, "counts": [0, 16]},
        },
        "strata": {"hop_bucket": "4", "anchor_bucket": "3"},
    }, {
        "expression": {"id": "e2", "gt_box": [0, 0, 5, 5], "gt_mask": None},
        "strata": {"hop_bucket": "3", "anchor_bucket": "3"},
    }]
    preds = {"e1": {"box": [0, 0, 10, 10],
                    "mask": {"width": 4, "height": 4, "counts": [0, 16]}}}
    records = join_predictions(gt_records, preds)
    assert len(records) == 2
    assert records[0].strata.hop_bucket == "4"
    assert records[0].pred_box is not None and records[0].pred_mask is not None
    assert records[1].pred_box is None and records[1].gt_mask is None
    report = stratified_report(records)
    assert report["overall"]["iou_at_box"] == pytest.approx(0.5)  # 1.0 and 0.0
