/**
 * Scene model: terrain heightmap plus the evolving water surface.
 *
 * Geometry builders are pure functions of their inputs (same frame, same
 * palette -> identical buffers), so the rendering layer stays a thin
 * wrapper and everything here is testable without a GL context.
 *
 * Scene coordinates: x = local east, z = -local north, y = up. Frame and
 * DEM vertices arrive in the dataset's local metre frame relative to the
 * reference point P(xllcorner, yllcorner); the renderer places the whole
 * scene group at P so meshes carry local coordinates exactly as streamed.
 */

import { depthToColorIndex, hexToRgb01 } from "./colors.js";
import { depthByCell, FloodFrame, vertexCount } from "./frames.js";
import { DatasetHeader } from "./form.js";
import { PlaybackState, initialPlayback } from "./playback.js";

export interface DemGrid {
  header: DatasetHeader;
  stride: number;
  elevation: number[][]; // [row][col], row 0 northernmost
}

export interface WaterGeometry {
  positions: Float32Array; // x, up, -y triples
  colors: Float32Array; // rgb in [0, 1] per vertex
  indices: Uint32Array;
  vertexCount: number;
}

export interface TerrainGeometry {
  positions: Float32Array;
  colors: Float32Array;
  indices: Uint32Array;
  heightAt(row: number, col: number): number;
}

export interface SceneModel {
  dataset: DatasetHeader | null;
  dem: DemGrid | null;
  frames: FloodFrame[];
  playback: PlaybackState;
  palette: string[];
  probes: Map<string, number>[]; // per frame: cell key -> exact depth
}

export function emptyScene(): SceneModel {
  return {
    dataset: null,
    dem: null,
    frames: [],
    playback: initialPlayback(),
    palette: [],
    probes: [],
  };
}

export function currentFrame(model: SceneModel): FloodFrame | null {
  return model.frames[model.playback.current] ?? null;
}

/** Water surface mesh for one frame, colored through the shared palette mapping. */
export function buildWaterGeometry(frame: FloodFrame, palette: string[]): WaterGeometry {
  const n = vertexCount(frame);
  const positions = new Float32Array(n * 3);
  const colors = new Float32Array(n * 3);
  const [lo, hi] = frame.depthMinMax;
  const rgbCache = palette.map(hexToRgb01);
  for (let k = 0; k < n; k++) {
    const x = frame.vertex[3 * k];
    const y = frame.vertex[3 * k + 1];
    const z = frame.vertex[3 * k + 2];
    positions[3 * k] = x;
    positions[3 * k + 1] = z;
    positions[3 * k + 2] = -y;
    const idx = depthToColorIndex(frame.depthValues[k], lo, hi, palette.length);
    const [r, g, b] = rgbCache[idx];
    colors[3 * k] = r;
    colors[3 * k + 1] = g;
    colors[3 * k + 2] = b;
  }
  return { positions, colors, indices: Uint32Array.from(frame.index), vertexCount: n };
}

/** Terrain heightmap mesh from the DEM endpoint payload (nodata cells sunk). */
export function buildTerrainGeometry(dem: DemGrid): TerrainGeometry {
  const { header, stride, elevation } = dem;
  const nrows = elevation.length;
  const ncols = elevation[0].length;
  const cs = header.cellsize * stride;
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of elevation) {
    for (const v of row) {
      if (v !== header.nodata_value) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (!isFinite(lo)) [lo, hi] = [0, 1];
  const span = hi > lo ? hi - lo : 1;

  const positions = new Float32Array(nrows * ncols * 3);
  const colors = new Float32Array(nrows * ncols * 3);
  for (let r = 0; r < nrows; r++) {
    for (let c = 0; c < ncols; c++) {
      const k = r * ncols + c;
      const raw = elevation[r][c];
      const nodata = raw === header.nodata_value;
      const h = nodata ? lo - span * 0.05 : raw;
      positions[3 * k] = (c + 0.5) * cs;
      positions[3 * k + 1] = h;
      positions[3 * k + 2] = -(nrows - 1 - r + 0.5) * cs;
      // muted green-to-brown ramp by relative elevation; nodata near-black
      const t = nodata ? 0 : (raw - lo) / span;
      colors[3 * k] = nodata ? 0.1 : 0.35 + 0.4 * t;
      colors[3 * k + 1] = nodata ? 0.1 : 0.5 - 0.15 * t;
      colors[3 * k + 2] = nodata ? 0.12 : 0.3 - 0.1 * t;
    }
  }
  const indices: number[] = [];
  for (let r = 0; r + 1 < nrows; r++) {
    for (let c = 0; c + 1 < ncols; c++) {
      const a = r * ncols + c;
      const b = a + 1;
      const lo2 = a + ncols;
      const hi2 = lo2 + 1;
      indices.push(a, lo2, b, b, lo2, hi2);
    }
  }
  return {
    positions,
    colors,
    indices: Uint32Array.from(indices),
    heightAt: (row, col) => elevation[row]?.[col] ?? header.nodata_value,
  };
}

export interface ProbeReading {
  depth: number;
  label: string;
}

/**
 * Depth readout for a grid cell at the current frame. Cells absent from the
 * frame (dry, never meshed) read 0; wet cells read the frame value exactly.
 */
export function probe(model: SceneModel, row: number, col: number): ProbeReading {
  const frame = currentFrame(model);
  const header = model.dataset;
  let depth = 0;
  if (frame && header) {
    const rowFromSouth = header.nrows - 1 - row;
    const hit = model.probes[model.playback.current]?.get(`${rowFromSouth}:${col}`);
    if (hit !== undefined) depth = hit;
  }
  return { depth, label: `${depth.toFixed(2)} m` };
}

/** Append a streamed frame; playback follows the live edge while playing. */
export function ingestFrame(model: SceneModel, frame: FloodFrame): SceneModel {
  const frames = [...model.frames, frame];
  const probes = [...model.probes, depthByCell(frame)];
  const playback = onFrameArrivedImported(model.playback);
  return { ...model, frames, probes, playback };
}

// small indirection keeps playback logic in one module
import { onFrameArrived as onFrameArrivedImported } from "./playback.js";

/** Scene-local cell under a ground-plane point (x, -y in scene space). */
export function cellAt(header: DatasetHeader, sceneX: number, sceneZ: number): { row: number; col: number } | null {
  const col = Math.floor(sceneX / header.cellsize);
  const rowFromSouth = Math.floor(-sceneZ / header.cellsize);
  const row = header.nrows - 1 - rowFromSouth;
  if (row < 0 || row >= header.nrows || col < 0 || col >= header.ncols) return null;
  return { row, col };
}
