"""Regenerate the checked-in fixture corpus.

Run from the repo root: python3 fixtures/generate_fixtures.py

Produces a 12-expression corpus on synthetic 100x100 images with designed
stage-B outcomes: 9 samples verify, 2 fail the ground-truth IoU filter
(e09, e10), and 1 fails judge verification on an anchor (e12).
"""

from __future__ import annotations

import json
import os

import numpy as np

from cotref.geometry import grid_to_mask
from cotref.records import Box, Expression, tokenize, write_jsonl

HERE = os.path.dirname(os.path.abspath(__file__))

W = H = 100

# (id, text, split, gt_box xyxy)
CORPUS = [
    ("e01", "the cat", "train", [20, 20, 60, 60]),
    ("e02", "cup", "train", [40, 40, 70, 80]),
    ("e03", "boy on girl with red skirt", "train", [10, 10, 40, 60]),
    ("e04", "the boy playing with a dog near the car", "val", [5, 5, 45, 55]),
    ("e05", "a lamp on the table beside the sofa", "val", [60, 10, 90, 50]),
    ("e06", "dog under the bench near the fence by the tree", "val", [15, 50, 55, 90]),
    ("e07", "the book on the shelf", "train", [30, 30, 70, 50]),
    ("e08", "bird on the roof of the house near the river", "test", [50, 5, 80, 35]),
    ("e09", "a ball under the chair next to the desk", "test", [10, 10, 50, 50]),
    ("e10", "girl with the umbrella near the bus", "val", [10, 10, 50, 50]),
    ("e11", "the plate on the table", "train", [25, 60, 75, 90]),
    ("e12", "man behind the counter with the lamp", "val", [20, 15, 50, 85]),
]

# Deterministic anchor boxes per expression id, one per non-target noun index.
ANCHOR_BOXES = {
    "e03": {1: [45, 20, 85, 90], 2: [50, 60, 80, 88]},
    "e04": {1: [50, 40, 75, 70], 2: [60, 60, 95, 95]},
    "e05": {1: [40, 45, 95, 95], 2: [5, 55, 40, 95]},
    "e06": {1: [10, 40, 60, 95], 2: [60, 10, 95, 95], 3: [70, 0, 90, 60]},
    "e07": {1: [10, 25, 90, 55]},
    "e08": {1: [30, 20, 95, 50], 2: [25, 15, 98, 85], 3: [0, 70, 100, 100]},
    "e09": {1: [5, 5, 60, 60], 2: [55, 10, 95, 80]},
    "e10": {1: [5, 0, 55, 40], 2: [50, 30, 95, 90]},
    "e11": {1: [10, 50, 95, 95]},
    "e12": {1: [10, 40, 90, 90], 2: [60, 10, 85, 40]},
}

# Targets that must fail the IoU_GT > 0.7 filter: shifted box, IoU = 1/3.
IOU_FAIL_TARGETS = {
    "e09": [30, 10, 70, 50],
    "e10": [30, 10, 70, 50],
}

# Anchor whose judge reference disagrees with the grounded box (-> reject).
JUDGE_REJECTS = {
    "e12": {1: [0, 0, 8, 8]},
}


def rect_mask(box: list[float]) -> dict:
    grid = np.zeros((H, W), dtype=bool)
    x0, y0, x1, y1 = (int(v) for v in box)
    grid[y0:y1, x0:x1] = True
    return grid_to_mask(grid).to_dict()


def main() -> None:
    expressions = []
    ground_fixtures = {}
    for expr_id, text, split, gt in CORPUS:
        tokens = tokenize(text)
        expressions.append(Expression(
            id=expr_id,
            image_id=f"img_{expr_id}",
            image_width=W,
            image_height=H,
            text=" ".join(tokens),
            tokens=tokens,
            split=split,
            gt_box=Box.from_list(gt),
            gt_mask=None,
        ))

        target_box = IOU_FAIL_TARGETS.get(expr_id, gt)
        anchors = ANCHOR_BOXES.get(expr_id, {})
        n_nouns = 1 + len(anchors)
        boxes = [[float(v) for v in target_box]]
        for idx in range(1, n_nouns):
            boxes.append([float(v) for v in anchors[idx]])
        ground_fixtures[expr_id] = boxes

    records = []
    for e, (expr_id, text, split, gt) in zip(expressions, CORPUS):
        d = e.to_dict()
        d["gt_mask"] = rect_mask(gt)
        records.append(d)
    write_jsonl(os.path.join(HERE, "corpus_expressions.jsonl"), records)

    mock = {
        "ground": ground_fixtures,
        "judge": {eid: {str(i): box for i, box in refs.items()}
                  for eid, refs in JUDGE_REJECTS.items()},
    }
    with open(os.path.join(HERE, "mock_fixtures.json"), "w", encoding="utf-8") as f:
        json.dump(mock, f, indent=2, sort_keys=True)
        f.write("\n")

    with open(os.path.join(HERE, "exclusion_list.txt"), "w", encoding="utf-8") as f:
        f.write("# image ids with known annotation errors, one per line\n")

    _write_source_files()
    print("fixtures written to", HERE)


def _write_source_files() -> None:
    """refCOCO-style source annotation files for the ingest tests."""
    instances = {
        "images": [
            {"id": 1, "width": 100, "height": 100, "file_name": "img1.jpg"},
            {"id": 2, "width": 80, "height": 60, "file_name": "img2.jpg"},
        ],
        "annotations": [
            {"id": 11, "image_id": 1, "bbox": [10, 10, 40, 40],
             "segmentation": [[20.0, 20.0, 60.0, 20.0, 60.0, 70.0, 20.0, 70.0]]},
            {"id": 12, "image_id": 2, "bbox": [5, 5, 30, 20],
             "segmentation": {"size": [60, 80],
                              "counts": [300, 60, 80 * 60 - 300 - 60]}},
        ],
    }
    refs = [
        {"ref_id": "r1", "ann_id": 11, "image_id": 1, "split": "train",
         "sentences": [{"sent": "boy on girl with red skirt"},
                       {"sent": "the cat"}]},
        {"ref_id": "r2", "ann_id": 12, "image_id": 2, "split": "val",
         "sentences": [{"sent": "a lamp on the table beside the sofa"}]},
        {"ref_id": "r3", "ann_id": 999, "image_id": 1, "split": "val",
         "sentences": [{"sent": "dangling"}]},
    ]
    with open(os.path.join(HERE, "source_instances.json"), "w", encoding="utf-8") as f:
        json.dump(instances, f, indent=2)
        f.write("\n")
    with open(os.path.join(HERE, "source_refs.json"), "w", encoding="utf-8") as f:
        json.dump(refs, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
