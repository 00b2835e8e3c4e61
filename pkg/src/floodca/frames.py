"""Flood snapshot frames: water-surface mesh plus per-vertex depths as JSON.

A frame holds a reference point P(xllcorner, yllcorner), the cellsize, a
flat ``vertex`` list (x_local, y_local, z triples, z = water stage), a flat
``index`` list of triangles, a ``depth`` pair [per-vertex depths, [min, max]]
and a free-form string ``information`` map. Vertices sit at the centres of
wet cells plus their immediate dry ring, where the depth is pinned to 0 so
the water surface meets the terrain at the shoreline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

FRAME_KEYS = ("xllcorner", "yllcorner", "cellsize", "vertex", "index", "depth", "information")


class FrameError(ValueError):
    """Frame violates the serialization contract."""


@dataclass
class FloodFrame:
    xllcorner: float
    yllcorner: float
    cellsize: float
    vertex: list[float]  # x, y, z triples, local coordinates relative to P
    index: list[int]  # vertex index triples forming triangles
    depth_values: list[float]  # one per vertex
    depth_minmax: list[float]  # [min, max] of depth_values (or [0, 0] when empty)
    information: dict[str, str] = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return len(self.vertex) // 3

    def validate(self) -> None:
        if len(self.vertex) % 3:
            raise FrameError("vertex length must be divisible by 3")
        if len(self.index) % 3:
            raise FrameError("index length must be divisible by 3")
        nv = self.vertex_count
        if any(not (0 <= i < nv) for i in self.index):
            raise FrameError("triangle index out of range")
        if len(self.depth_values) != nv:
            raise FrameError(f"{len(self.depth_values)} depths for {nv} vertices")
        if any(d < 0 for d in self.depth_values):
            raise FrameError("negative vertex depth")
        expect = [min(self.depth_values), max(self.depth_values)] if self.depth_values else [0.0, 0.0]
        if self.depth_minmax != expect:
            raise FrameError(f"depth minmax {self.depth_minmax} != {expect}")


def build_frame(state, terrain, wet_threshold: float, information: dict[str, str] | None = None) -> FloodFrame:
    """Mesh the water surface of a state over its terrain.

    ``state`` needs only ``.depth`` (2D array) — the engine's FloodState or
    any stand-in works. Vertices cover wet cells (depth > wet_threshold) and
    their 8-neighbour dry ring, in row-major order; z is the water stage
    e + d, with ring depths forced to 0. Triangles are emitted per quad of
    adjacent included cells, split along a fixed diagonal, and only when all
    three corners exist. Fully deterministic.
    """
    depth = np.asarray(state.depth, dtype=np.float64)
    valid = terrain.valid_mask
    wet = (depth > wet_threshold) & valid

    ring = np.zeros_like(wet)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            shifted = np.zeros_like(wet)
            rs = slice(max(dr, 0), wet.shape[0] + min(dr, 0))
            rd = slice(max(-dr, 0), wet.shape[0] + min(-dr, 0))
            cs = slice(max(dc, 0), wet.shape[1] + min(dc, 0))
            cd = slice(max(-dc, 0), wet.shape[1] + min(-dc, 0))
            shifted[rd, cd] = wet[rs, cs]
            ring |= shifted
    include = (wet | ring) & valid

    nrows, ncols = depth.shape
    cs_m = terrain.cellsize
    vertex: list[float] = []
    depths: list[float] = []
    vid = np.full(depth.shape, -1, dtype=np.int64)
    rows, cols = np.nonzero(include)
    for k, (r, c) in enumerate(zip(rows.tolist(), cols.tolist())):
        vid[r, c] = k
        d = float(depth[r, c]) if wet[r, c] else 0.0
        x = (c + 0.5) * cs_m
        y = (nrows - 1 - r + 0.5) * cs_m
        vertex.extend((x, y, float(terrain.elevation[r, c]) + d))
        depths.append(d)

    index: list[int] = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r + 1 >= nrows or c + 1 >= ncols:
            continue
        a = vid[r, c]
        b = vid[r, c + 1]
        lo = vid[r + 1, c]
        hi = vid[r + 1, c + 1]
        # shared diagonal lo-b; counter-clockwise seen from above
        if a >= 0 and lo >= 0 and b >= 0:
            index.extend((int(a), int(lo), int(b)))
        if b >= 0 and lo >= 0 and hi >= 0:
            index.extend((int(b), int(lo), int(hi)))

    minmax = [min(depths), max(depths)] if depths else [0.0, 0.0]
    return FloodFrame(
        xllcorner=terrain.xllcorner,
        yllcorner=terrain.yllcorner,
        cellsize=cs_m,
        vertex=vertex,
        index=index,
        depth_values=depths,
        depth_minmax=minmax,
        information=dict(information or {}),
    )


def serialize_frame(frame: FloodFrame) -> bytes:
    """Frame -> canonical JSON bytes (fixed key order, compact separators).

    Byte-stable for identical frames, so golden-file comparison works.
    Raises FrameError naming the field holding any non-finite number.
    """
    frame.validate()
    for name, values in (
        ("xllcorner", [frame.xllcorner]),
        ("yllcorner", [frame.yllcorner]),
        ("cellsize", [frame.cellsize]),
        ("vertex", frame.vertex),
        ("depth", frame.depth_values + frame.depth_minmax),
    ):
        if any(not math.isfinite(v) for v in values):
            raise FrameError(f"non-finite value in field {name!r}")
    doc = {
        "xllcorner": frame.xllcorner,
        "yllcorner": frame.yllcorner,
        "cellsize": frame.cellsize,
        "vertex": frame.vertex,
        "index": frame.index,
        "depth": [frame.depth_values, frame.depth_minmax],
        "information": frame.information,
    }
    return json.dumps(doc, separators=(",", ":")).encode("ascii")


def parse_frame(data: bytes | str) -> FloodFrame:
    """Inverse of serialize_frame, with full invariant validation."""
    doc = json.loads(data)
    missing = [k for k in FRAME_KEYS if k not in doc]
    if missing:
        raise FrameError(f"frame document missing keys: {missing}")
    depth = doc["depth"]
    if not (isinstance(depth, list) and len(depth) == 2):
        raise FrameError("depth must be [values, [min, max]]")
    frame = FloodFrame(
        xllcorner=float(doc["xllcorner"]),
        yllcorner=float(doc["yllcorner"]),
        cellsize=float(doc["cellsize"]),
        vertex=[float(v) for v in doc["vertex"]],
        index=[int(i) for i in doc["index"]],
        depth_values=[float(v) for v in depth[0]],
        depth_minmax=[float(v) for v in depth[1]],
        information={str(k): str(v) for k, v in doc["information"].items()},
    )
    frame.validate()
    return frame


def depth_to_color_index(depth: float, minmax: tuple[float, float], palette_size: int) -> int:
    """Map a depth onto a palette index: min -> 0, max -> palette_size - 1,
    linear with floor in between, clamped; a degenerate range maps to 0."""
    if palette_size < 2:
        raise ValueError("palette_size must be >= 2")
    lo, hi = minmax
    if hi <= lo:
        return 0
    t = (depth - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0)  # also guards overflow on near-degenerate ranges
    return min(math.floor(t * (palette_size - 1)), palette_size - 1)


def default_palette(size: int = 256) -> list[str]:
    """Blue ramp, light to dark with increasing depth, as #rrggbb strings."""
    start = (0xD4, 0xEE, 0xFF)
    end = (0x08, 0x30, 0x6B)
    out = []
    for i in range(size):
        t = i / (size - 1)
        rgb = tuple(round(s + (e - s) * t) for s, e in zip(start, end))
        out.append("#{:02x}{:02x}{:02x}".format(*rgb))
    return out


def frame_filename(step_index: int) -> str:
    return f"frame_{step_index:06d}.json"
