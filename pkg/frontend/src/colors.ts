// Deterministic slot colors: the same sample id and slot index always yield
// the same color, and the N slots of one sample get N distinct colors.

const GOLDEN_ANGLE = 137.50776405003785;

/** 32-bit FNV-1a hash of a string. */
export function hashString(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

/** Color for one grounding slot, keyed by sample id and slot index. */
export function slotColor(sampleId: string, slot: number): string {
  const base = hashString(sampleId) % 360;
  const hue = (base + slot * GOLDEN_ANGLE) % 360;
  const lightness = 42 + (slot % 3) * 9;
  return `hsl(${hue.toFixed(2)}, 85%, ${lightness}%)`;
}

/** Colors for the first n slots of a sample; pairwise distinct. */
export function slotColors(sampleId: string, n: number): string[] {
  const out: string[] = [];
  for (let i = 0; i < n; i++) out.push(slotColor(sampleId, i));
  return out;
}
