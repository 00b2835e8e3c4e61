import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";

import { defaultPalette, hexToRgb01 } from "../src/colors.js";
import { parseFrame, vertexCount } from "../src/frames.js";
import { DatasetHeader } from "../src/form.js";
import {
  buildTerrainGeometry,
  buildWaterGeometry,
  cellAt,
  emptyScene,
  ingestFrame,
  probe,
} from "../src/scene.js";

const goldenDoc = JSON.parse(readFileSync(new URL("./fixtures/golden_frame_2x2.json", import.meta.url), "utf-8"));

const header: DatasetHeader = {
  id: "golden",
  ncols: 6,
  nrows: 6,
  xllcorner: 0,
  yllcorner: 0,
  cellsize: 1,
  nodata_value: -9999,
  crs_label: "synthetic",
};

function goldenScene() {
  let model = { ...emptyScene(), dataset: header, palette: defaultPalette(256) };
  return ingestFrame(model, parseFrame(goldenDoc));
}

describe("water geometry from the golden frame", () => {
  it("renders the exact vertex count", () => {
    const frame = parseFrame(goldenDoc);
    const geo = buildWaterGeometry(frame, defaultPalette(256));
    expect(geo.vertexCount).toBe(16);
    expect(geo.positions.length).toBe(48);
    expect(geo.indices.length).toBe(18 * 3);
  });

  it("colors shoreline vertices with palette[0] and crest with palette[last]", () => {
    const palette = defaultPalette(256);
    const frame = parseFrame(goldenDoc);
    const geo = buildWaterGeometry(frame, palette);
    const lowest = hexToRgb01(palette[0]);
    const highest = hexToRgb01(palette[255]);
    frame.depthValues.forEach((d, k) => {
      const rgb = [geo.colors[3 * k], geo.colors[3 * k + 1], geo.colors[3 * k + 2]];
      const expected = d === 0 ? lowest : highest; // golden depths are only 0 or the max
      expected.forEach((channel, i) => expect(rgb[i]).toBeCloseTo(channel, 6));
    });
  });

  it("is a pure function: identical buffers on every call", () => {
    const frame = parseFrame(goldenDoc);
    const a = buildWaterGeometry(frame, defaultPalette(256));
    const b = buildWaterGeometry(frame, defaultPalette(256));
    expect(Array.from(a.positions)).toEqual(Array.from(b.positions));
    expect(Array.from(a.colors)).toEqual(Array.from(b.colors));
    expect(Array.from(a.indices)).toEqual(Array.from(b.indices));
  });

  it("maps local y north-up into scene -z", () => {
    const frame = parseFrame(goldenDoc);
    const geo = buildWaterGeometry(frame, defaultPalette(256));
    expect(geo.positions[0]).toBe(frame.vertex[0]);
    expect(geo.positions[1]).toBe(frame.vertex[2]);
    expect(geo.positions[2]).toBe(-frame.vertex[1]);
  });
});

describe("probe", () => {
  it("reads wet cells exactly and dry cells as 0.00 m", () => {
    const model = goldenScene();
    const frame = model.frames[0];
    // wet patch rows 2..3, cols 2..3 of the 6x6 golden grid at depth 1.0
    const wet = probe(model, 2, 2);
    expect(wet.depth).toBe(1.0);
    expect(wet.label).toBe("1.00 m");
    const dry = probe(model, 0, 0);
    expect(dry.depth).toBe(0);
    expect(dry.label).toBe("0.00 m");
    // every vertex of the frame must be probeable at its exact value
    for (let k = 0; k < vertexCount(frame); k++) {
      const col = Math.floor(frame.vertex[3 * k] / frame.cellsize);
      const rowFromSouth = Math.floor(frame.vertex[3 * k + 1] / frame.cellsize);
      const row = header.nrows - 1 - rowFromSouth;
      expect(probe(model, row, col).depth).toBe(frame.depthValues[k]);
    }
  });

  it("reads 0.00 m with no frames loaded", () => {
    const model = { ...emptyScene(), dataset: header };
    expect(probe(model, 1, 1).label).toBe("0.00 m");
  });
});

describe("terrain geometry", () => {
  it("builds a vertex per DEM sample and sinks nodata", () => {
    const dem = {
      header,
      stride: 1,
      elevation: [
        [1, 2],
        [-9999, 4],
      ],
    };
    const geo = buildTerrainGeometry(dem);
    expect(geo.positions.length).toBe(4 * 3);
    expect(geo.indices.length).toBe(6); // one quad
    const heights = [geo.positions[1], geo.positions[4], geo.positions[7], geo.positions[10]];
    expect(Math.min(...heights)).toBeLessThan(1); // nodata sits below the valid floor
    expect(geo.heightAt(1, 1)).toBe(4);
  });
});

describe("cellAt", () => {
  it("maps scene coordinates back to grid cells", () => {
    expect(cellAt(header, 2.5, -3.5)).toEqual({ row: 2, col: 2 });
    expect(cellAt(header, 0.1, -0.1)).toEqual({ row: 5, col: 0 });
    expect(cellAt(header, -1, -1)).toBeNull();
    expect(cellAt(header, 99, -1)).toBeNull();
  });
});
