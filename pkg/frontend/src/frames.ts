/**
 * Flood frame documents as streamed by the server: a reference point,
 * cellsize, flat vertex triples (x_local, y_local, z = water stage), flat
 * triangle indices, per-vertex depths with their [min, max], and a string
 * information map.
 */

export interface FloodFrame {
  xllcorner: number;
  yllcorner: number;
  cellsize: number;
  vertex: number[];
  index: number[];
  depthValues: number[];
  depthMinMax: [number, number];
  information: Record<string, string>;
}

export function parseFrame(doc: unknown): FloodFrame {
  const d = doc as Record<string, unknown>;
  for (const key of ["xllcorner", "yllcorner", "cellsize", "vertex", "index", "depth", "information"]) {
    if (!(key in d)) throw new Error(`frame document missing key ${key}`);
  }
  const depth = d.depth as [number[], [number, number]];
  const frame: FloodFrame = {
    xllcorner: d.xllcorner as number,
    yllcorner: d.yllcorner as number,
    cellsize: d.cellsize as number,
    vertex: d.vertex as number[],
    index: d.index as number[],
    depthValues: depth[0],
    depthMinMax: depth[1],
    information: d.information as Record<string, string>,
  };
  if (frame.vertex.length % 3 !== 0) throw new Error("vertex length not divisible by 3");
  if (frame.depthValues.length !== frame.vertex.length / 3) {
    throw new Error("one depth per vertex required");
  }
  return frame;
}

export function vertexCount(frame: FloodFrame): number {
  return frame.vertex.length / 3;
}

/** Cell key for probe lookups; vertices sit at cell centres. */
export function cellKeyOf(frame: FloodFrame, vertexIdx: number): string {
  const x = frame.vertex[3 * vertexIdx];
  const y = frame.vertex[3 * vertexIdx + 1];
  const col = Math.floor(x / frame.cellsize);
  const rowFromSouth = Math.floor(y / frame.cellsize);
  return `${rowFromSouth}:${col}`;
}

/** Map cell key -> exact per-vertex depth for one frame. */
export function depthByCell(frame: FloodFrame): Map<string, number> {
  const map = new Map<string, number>();
  for (let k = 0; k < vertexCount(frame); k++) {
    map.set(cellKeyOf(frame, k), frame.depthValues[k]);
  }
  return map;
}
