import { describe, expect, it } from "vitest";
import { clampCrop, defaultCrop, isWithinBounds, moveCrop, resizeCrop } from "../src/crop.js";

describe("defaultCrop", () => {
  it("is the centered maximal square for a landscape image", () => {
    expect(defaultCrop(640, 480)).toEqual({ x: 80, y: 0, side: 480 });
  });

  it("is the centered maximal square for a portrait image", () => {
    expect(defaultCrop(480, 640)).toEqual({ x: 0, y: 80, side: 480 });
  });

  it("covers a square image exactly", () => {
    expect(defaultCrop(512, 512)).toEqual({ x: 0, y: 0, side: 512 });
  });

  it("is always within bounds", () => {
    for (const [w, h] of [[1, 1], [7, 3], [3, 7], [1024, 33]]) {
      expect(isWithinBounds(defaultCrop(w, h), w, h)).toBe(true);
    }
  });
});

describe("clampCrop", () => {
  it("leaves a valid rect unchanged", () => {
    expect(clampCrop({ x: 10, y: 20, side: 64 }, 200, 200)).toEqual({ x: 10, y: 20, side: 64 });
  });

  it("pulls a rect hanging off the right edge back inside", () => {
    const rect = clampCrop({ x: 180, y: 0, side: 64 }, 200, 200);
    expect(isWithinBounds(rect, 200, 200)).toBe(true);
    expect(rect.side).toBe(64);
  });

  it("shrinks an oversized rect to the image's short side", () => {
    const rect = clampCrop({ x: 0, y: 0, side: 999 }, 300, 200);
    expect(rect.side).toBe(200);
    expect(isWithinBounds(rect, 300, 200)).toBe(true);
  });

  it("enforces the minimum side when the image allows it", () => {
    const rect = clampCrop({ x: 0, y: 0, side: 1 }, 200, 200);
    expect(rect.side).toBe(32);
  });

  it("falls back to the full image when it is smaller than the minimum side", () => {
    const rect = clampCrop({ x: 0, y: 0, side: 1 }, 16, 16);
    expect(rect).toEqual({ x: 0, y: 0, side: 16 });
  });

  it("never emits an out-of-bounds rect, for any input", () => {
    // deterministic pseudo-random sweep over adversarial rects
    let state = 12345;
    const rand = (n: number) => {
      state = (state * 1103515245 + 12345) % 2147483648;
      return (state % (2 * n)) - n;
    };
    for (let i = 0; i < 2000; i++) {
      const w = 32 + Math.abs(rand(600));
      const h = 32 + Math.abs(rand(600));
      const rect = clampCrop({ x: rand(1200), y: rand(1200), side: rand(1200) }, w, h);
      expect(isWithinBounds(rect, w, h)).toBe(true);
      expect(Number.isInteger(rect.x)).toBe(true);
      expect(Number.isInteger(rect.y)).toBe(true);
      expect(Number.isInteger(rect.side)).toBe(true);
    }
  });
});

describe("moveCrop and resizeCrop", () => {
  it("moves freely inside the image", () => {
    expect(moveCrop({ x: 50, y: 50, side: 64 }, 10, -5, 300, 300)).toEqual({
      x: 60,
      y: 45,
      side: 64,
    });
  });

  it("stops at the image edges", () => {
    const rect = moveCrop({ x: 0, y: 0, side: 64 }, -100, -100, 300, 300);
    expect(rect).toEqual({ x: 0, y: 0, side: 64 });
  });

  it("grows until it hits the short side", () => {
    let rect = { x: 0, y: 0, side: 100 };
    for (let i = 0; i < 50; i++) {
      rect = resizeCrop(rect, 16, 300, 200);
      expect(isWithinBounds(rect, 300, 200)).toBe(true);
    }
    expect(rect.side).toBe(200);
  });

  it("shrinks no further than the minimum side", () => {
    let rect = { x: 10, y: 10, side: 100 };
    for (let i = 0; i < 50; i++) {
      rect = resizeCrop(rect, -16, 300, 200);
      expect(isWithinBounds(rect, 300, 200)).toBe(true);
    }
    expect(rect.side).toBe(32);
  });
});
