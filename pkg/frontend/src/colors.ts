/**
 * Depth-to-color mapping. Must agree bit-for-bit with the engine's mapping:
 * min -> 0, max -> last index, linear with floor in between, clamped;
 * a degenerate range maps everything to 0.
 */

export function depthToColorIndex(depth: number, lo: number, hi: number, paletteSize: number): number {
  if (paletteSize < 2) throw new Error("palette size must be >= 2");
  if (hi <= lo) return 0;
  let t = (depth - lo) / (hi - lo);
  t = Math.min(Math.max(t, 0), 1);
  return Math.min(Math.floor(t * (paletteSize - 1)), paletteSize - 1);
}

/** Blue ramp, light to dark with increasing depth, as #rrggbb strings. */
export function defaultPalette(size = 256): string[] {
  const start = [0xd4, 0xee, 0xff];
  const end = [0x08, 0x30, 0x6b];
  const out: string[] = [];
  for (let i = 0; i < size; i++) {
    const t = i / (size - 1);
    const rgb = start.map((s, k) => Math.round(s + (end[k] - s) * t));
    out.push("#" + rgb.map((v) => v.toString(16).padStart(2, "0")).join(""));
  }
  return out;
}

export function hexToRgb01(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [((v >> 16) & 0xff) / 255, ((v >> 8) & 0xff) / 255, (v & 0xff) / 255];
}
