import { describe, expect, it } from "vitest";

import { drawOverlays, type Context2D } from "../src/render.js";
import { toReviewCard } from "../src/reviewCard.js";
import { sampleBoyGirlSkirt } from "./fixtures.js";

interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
  lineWidth: number;
}

function recordingContext() {
  const rects: Rect[] = [];
  const labels: { text: string; color: string }[] = [];
  const ctx: Context2D = {
    strokeStyle: "",
    fillStyle: "",
    lineWidth: 0,
    font: "",
    clearRect: () => {},
    strokeRect(x, y, w, h) {
      rects.push({
        x,
        y,
        w,
        h,
        color: String(this.strokeStyle),
        lineWidth: this.lineWidth,
      });
    },
    fillText(text) {
      labels.push({ text, color: String(this.fillStyle) });
    },
  };
  return { ctx, rects, labels };
}

describe("drawOverlays", () => {
  it("draws one rect per slot at native pixel coordinates", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    const { ctx, rects } = recordingContext();
    drawOverlays(ctx, card, 1);
    expect(rects).toHaveLength(3);
    // slot 0 = skirt box [50, 60, 80, 88]
    expect(rects[0]).toMatchObject({ x: 50, y: 60, w: 30, h: 28 });
    // target (boy) drawn last, thicker
    expect(rects[2]).toMatchObject({ x: 10, y: 10, w: 30, h: 50, lineWidth: 3 });
    expect(rects[0].lineWidth).toBe(2);
  });

  it("applies viewport scaling uniformly", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    const { ctx, rects } = recordingContext();
    drawOverlays(ctx, card, 2.5);
    expect(rects[0]).toMatchObject({ x: 125, y: 150, w: 75, h: 70 });
  });

  it("strokes and labels each box in its slot color", () => {
    const card = toReviewCard(sampleBoyGirlSkirt());
    const { ctx, rects, labels } = recordingContext();
    drawOverlays(ctx, card, 1);
    card.overlays.forEach((o, i) => {
      expect(rects[i].color).toBe(o.color);
      expect(labels[i].color).toBe(o.color);
      expect(labels[i].text).toContain(o.label);
      expect(labels[i].text).toContain(`H.L. ${o.hopLevel}`);
    });
  });
});
