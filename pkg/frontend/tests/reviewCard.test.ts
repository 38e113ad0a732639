import { describe, expect, it } from "vitest";

import { slotColor } from "../src/colors.js";
import { hopBucket, toReviewCard } from "../src/reviewCard.js";
import { sampleBoyGirlSkirt, sampleSingleNoun } from "./fixtures.js";

describe("toReviewCard", () => {
  it("orders overlays by reasoning slot with colors keyed to slot index", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    expect(card.overlays.map((o) => o.label)).toEqual([
      "skirt",
      "girl",
      "boy",
    ]);
    expect(card.overlays.map((o) => o.kind)).toEqual([
      "anchor",
      "anchor",
      "target",
    ]);
    expect(card.overlays.map((o) => o.nounIndex)).toEqual([2, 1, 0]);
    card.overlays.forEach((o, i) => {
      expect(o.slot).toBe(i);
      expect(o.color).toBe(slotColor("e03", i));
    });
  });

  it("takes box pixel coordinates straight from the record, by noun index", () => {
    const sample = sampleBoyGirlSkirt();
    const card = toReviewCard(sample);
    // slot 0 is the skirt = noun index 2
    expect(card.overlays[0].box).toEqual(sample.boxes![2]);
    expect(card.overlays[2].box).toEqual(sample.boxes![0]); // target = boy
  });

  it("reports hop levels in the human-facing convention (internal + 1)", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    expect(card.hopLevels).toEqual([3, 2, 1]);
    expect(card.lMaxReported).toBe(3);
    expect(card.hopBucket).toBe("3");
  });

  it("highlights expression tokens with the same slot -> color mapping", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    const bySlot = new Map(
      card.originalSegments
        .filter((s) => s.slot !== null)
        .map((s) => [s.slot, s]),
    );
    expect(bySlot.get(0)?.text).toBe("skirt");
    expect(bySlot.get(1)?.text).toBe("girl");
    expect(bySlot.get(2)?.text).toBe("boy");
    for (const o of card.overlays) {
      expect(bySlot.get(o.slot)?.color).toBe(o.color);
    }
    // Joining the segments reconstructs the expression verbatim.
    expect(card.originalSegments.map((s) => s.text).join(" ")).toBe(
      "boy on girl with red skirt",
    );
  });

  it("highlights answer nouns with the same colors, in reasoning order", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    const highlighted = card.answerSegments.filter((s) => s.slot !== null);
    expect(highlighted.map((s) => s.text)).toEqual(["skirt", "girl", "boy"]);
    highlighted.forEach((s, i) => {
      expect(s.color).toBe(card.overlays[i].color);
    });
    expect(card.answerSegments.map((s) => s.text).join("")).toBe(
      card.answerText,
    );
  });

  it("merges multi-token noun spans into one highlighted segment", () => {
    const sample = sampleBoyGirlSkirt();
    sample.parsed!.nouns[2] = {
      text: "red skirt",
      span_start: 4,
      span_end: 6,
      hop_level: 2,
    };
    sample.cot!.answer_text =
      "red skirt [LOC] , girl [LOC] , boy [LOC] is the target.";
    const card = toReviewCard(sample);
    const seg = card.originalSegments.find((s) => s.slot === 0);
    expect(seg?.text).toBe("red skirt");
  });

  it("carries status, split, image url and dimensions", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    expect(card.id).toBe("e03");
    expect(card.split).toBe("train");
    expect(card.status).toBe("verified");
    expect(card.reviewStatus).toBe("pending");
    expect(card.imageUrl).toBe("/images/img_e03.jpg");
    expect(card.imageWidth).toBe(100);
    expect(card.imageHeight).toBe(100);
    expect(card.targetIouGt).toBe(1.0);
  });

  it("tolerates records without parse/cot/box payloads", () => {
    const sample = sampleSingleNoun("eF");
    sample.parsed = null;
    sample.cot = null;
    sample.boxes = null;
    sample.status = "failed_A1";
    sample.review_status = "failed_A1";
    const card = toReviewCard(sample);
    expect(card.overlays).toEqual([]);
    expect(card.answerSegments).toEqual([]);
    expect(card.originalSegments.map((s) => s.text).join(" ")).toBe("the cat");
    expect(card.hopBucket).toBe("0");
  });

  it("buckets reported hop levels with a 5plus tail", () => {
    expect(hopBucket(1)).toBe("1");
    expect(hopBucket(3)).toBe("3");
    expect(hopBucket(4)).toBe("4");
    expect(hopBucket(5)).toBe("5plus");
    expect(hopBucket(9)).toBe("5plus");
  });
});
