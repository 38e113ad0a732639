import type { ReviewCard } from "./reviewCard.js";

// Minimal 2D-context surface so overlay drawing is testable without a DOM.
export interface Context2D {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

/** Draw a card's boxes at native pixel coordinates times the viewport scale.
 * Targets get a thicker stroke; each box is labeled with its slot number,
 * noun, and reported hop level in the slot's color. */
export function drawOverlays(
  ctx: Context2D,
  card: ReviewCard,
  scale: number = 1,
): void {
  ctx.clearRect(0, 0, card.imageWidth * scale, card.imageHeight * scale);
  for (const o of card.overlays) {
    const [x0, y0, x1, y1] = o.box;
    ctx.strokeStyle = o.color;
    ctx.lineWidth = o.kind === "target" ? 3 : 2;
    ctx.strokeRect(x0 * scale, y0 * scale, (x1 - x0) * scale, (y1 - y0) * scale);
    ctx.fillStyle = o.color;
    ctx.font = "12px sans-serif";
    ctx.fillText(
      `${o.slot + 1}. ${o.label} (H.L. ${o.hopLevel})`,
      x0 * scale + 2,
      Math.max(y0 * scale - 4, 12),
    );
  }
}
