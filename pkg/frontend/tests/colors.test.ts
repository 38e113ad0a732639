import { describe, expect, it } from "vitest";

import { hashString, slotColor, slotColors } from "../src/colors.js";

describe("slot colors", () => {
  it("is deterministic for the same sample id and slot index", () => {
    expect(slotColor("e03", 2)).toBe(slotColor("e03", 2));
    expect(slotColors("e07", 5)).toEqual(slotColors("e07", 5));
  });

  it("assigns N distinct colors to the N slots of one sample", () => {
    for (const id of ["e01", "e03", "sample-42", "img_e12", "x"]) {
      const colors = slotColors(id, 25);
      expect(new Set(colors).size).toBe(25);
    }
  });

  it("varies with the sample id", () => {
    const ids = Array.from({ length: 50 }, (_, i) => `sample-${i}`);
    const firstColors = new Set(ids.map((id) => slotColor(id, 0)));
    expect(firstColors.size).toBeGreaterThan(40);
  });

  it("emits valid hsl() strings", () => {
    expect(slotColor("e03", 0)).toMatch(
      /^hsl\(\d+(\.\d+)?, 85%, \d+%\)$/,
    );
  });

  it("hashString is stable and 32-bit", () => {
    expect(hashString("e03")).toBe(hashString("e03"));
    expect(hashString("")).toBe(0x811c9dc5);
    for (const s of ["a", "abc", "e12", "長い文字列"]) {
      const h = hashString(s);
      expect(Number.isInteger(h)).toBe(true);
      expect(h).toBeGreaterThanOrEqual(0);
      expect(h).toBeLessThan(2 ** 32);
    }
  });
});
