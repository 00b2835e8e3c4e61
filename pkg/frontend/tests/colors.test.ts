import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";

import { defaultPalette, depthToColorIndex, hexToRgb01 } from "../src/colors.js";

const fixture = JSON.parse(readFileSync(new URL("./fixtures/color_vectors.json", import.meta.url), "utf-8"));

describe("depthToColorIndex", () => {
  it("agrees with the engine on every shared test vector", () => {
    for (const v of fixture.vectors) {
      expect(depthToColorIndex(v.depth, v.lo, v.hi, v.size), JSON.stringify(v)).toBe(v.expected);
    }
  });

  it("maps endpoints and midpoint per the floor rule", () => {
    expect(depthToColorIndex(0, 0, 2, 256)).toBe(0);
    expect(depthToColorIndex(2, 0, 2, 256)).toBe(255);
    expect(depthToColorIndex(1, 0, 2, 256)).toBe(127);
  });

  it("maps a degenerate range to 0", () => {
    expect(depthToColorIndex(5, 1, 1, 256)).toBe(0);
  });

  it("rejects palettes smaller than 2", () => {
    expect(() => depthToColorIndex(0, 0, 1, 1)).toThrow();
  });
});

describe("defaultPalette", () => {
  it("equals the engine's default palette exactly", () => {
    expect(defaultPalette(256)).toEqual(fixture.default_palette);
  });

  it("parses to rgb triples in [0, 1]", () => {
    const [r, g, b] = hexToRgb01("#08306b");
    expect(r).toBeCloseTo(0x08 / 255, 10);
    expect(g).toBeCloseTo(0x30 / 255, 10);
    expect(b).toBeCloseTo(0x6b / 255, 10);
  });
});
