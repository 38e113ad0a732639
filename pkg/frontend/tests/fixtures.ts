import type { SampleRecord } from "../src/types.js";

/** A three-noun verified sample in the exact shape the review service
 * serves: target "boy" (hop 0), anchors "girl" (hop 1) and "skirt" (hop 2),
 * reasoning order skirt -> girl -> boy. */
export function sampleBoyGirlSkirt(
  overrides: Partial<SampleRecord> = {},
): SampleRecord {
  return {
    expression: {
      id: "e03",
      image_id: "img_e03",
      image_width: 100,
      image_height: 100,
      text: "boy on girl with red skirt",
      tokens: ["boy", "on", "girl", "with", "red", "skirt"],
      split: "train",
      image_uri: "/img/img_e03.jpg",
      gt_box: [10, 10, 40, 60],
    },
    parsed: {
      expression_id: "e03",
      nouns: [
        { text: "boy", span_start: 0, span_end: 1, hop_level: 0 },
        { text: "girl", span_start: 2, span_end: 3, hop_level: 1 },
        { text: "skirt", span_start: 5, span_end: 6, hop_level: 2 },
      ],
      target_indices: [0],
      l_max_internal: 2,
      l_max_reported: 3,
    },
    cot: {
      answer_text: "skirt [LOC] , girl [LOC] , boy [LOC] is the target.",
      slots: [
        [2, "anchor"],
        [1, "anchor"],
        [0, "target"],
      ],
    },
    boxes: [
      [10, 10, 40, 60],
      [45, 20, 85, 90],
      [50, 60, 80, 88],
    ],
    confidences: [0.9, 0.9, 0.9],
    judge_verdicts: ["accept", "accept", "accept"],
    target_iou_gt: 1.0,
    status: "verified",
    review_status: "pending",
    image_url: "/images/img_e03.jpg",
    ...overrides,
  };
}

/** A single-noun sample, varying id / split / reported L_max. */
export function sampleSingleNoun(
  id: string,
  split: string = "train",
  lMaxReported: number = 1,
): SampleRecord {
  return sampleBoyGirlSkirt({
    expression: {
      id,
      image_id: `img_${id}`,
      image_width: 100,
      image_height: 100,
      text: "the cat",
      tokens: ["the", "cat"],
      split,
      image_uri: null,
      gt_box: [20, 20, 60, 60],
    },
    parsed: {
      expression_id: id,
      nouns: [{ text: "cat", span_start: 1, span_end: 2, hop_level: 0 }],
      target_indices: [0],
      l_max_internal: 0,
      l_max_reported: lMaxReported,
    },
    cot: { answer_text: "cat [LOC] is the target.", slots: [[0, "target"]] },
    boxes: [[20, 20, 60, 60]],
    confidences: [0.9],
    judge_verdicts: ["accept"],
  });
}
