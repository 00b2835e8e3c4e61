"""Affected-feature analysis: intersect inundation depth with vector features.

Polygons cover the cells whose centres they contain (even-odd rule);
polylines cover every cell any of their segments passes through. A feature
is affected when the maximum depth over its cells exceeds the threshold
(default 0.05 m). Depth classes use standard flood-map bins, configurable
because they are cartographic convention, not physics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .frames import FloodFrame
from .rasters import Feature, FeatureSet, TerrainGrid

DEFAULT_AFFECT_THRESHOLD = 0.05  # m
DEPTH_CLASS_EDGES = (0.5, 1.0, 2.0, 4.0)  # m
DEPTH_CLASS_LABELS = ("0-0.5m", "0.5-1m", "1-2m", "2-4m", ">4m")


@dataclass
class FeatureImpact:
    id: str
    kind: str
    affected: bool
    max_depth: float
    inundated_fraction: float  # share of the feature's cells above threshold
    depth_class: str  # "" when not affected
    out_of_extent: bool = False


@dataclass
class ImpactReport:
    affect_threshold: float
    features: list[FeatureImpact] = field(default_factory=list)

    @property
    def affected_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for f in self.features:
            if f.affected:
                counts[f.kind] = counts.get(f.kind, 0) + 1
        return counts

    def affected(self) -> list[FeatureImpact]:
        return [f for f in self.features if f.affected]


def depth_class(depth: float) -> str:
    for edge, label in zip(DEPTH_CLASS_EDGES, DEPTH_CLASS_LABELS):
        if depth <= edge:
            return label
    return DEPTH_CLASS_LABELS[-1]


def point_in_polygon(x: float, y: float, rings: list[list[tuple[float, float]]]) -> bool:
    """Even-odd containment over all rings (holes handled naturally)."""
    inside = False
    for ring in rings:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if (y1 > y) != (y2 > y):
                xcross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xcross:
                    inside = not inside
    return inside


def _segment_cells(terrain: TerrainGrid, p0: tuple[float, float], p1: tuple[float, float]):
    """Cells a segment passes through (supercover DDA on the cell lattice)."""
    cs = terrain.cellsize
    # continuous cell coordinates: u along columns, v along rows-from-south
    u0 = (p0[0] - terrain.xllcorner) / cs
    v0 = (p0[1] - terrain.yllcorner) / cs
    u1 = (p1[0] - terrain.xllcorner) / cs
    v1 = (p1[1] - terrain.yllcorner) / cs
    steps = max(1, int(math.ceil(max(abs(u1 - u0), abs(v1 - v0)) * 4)))
    cells = set()
    for s in range(steps + 1):
        t = s / steps
        u = u0 + (u1 - u0) * t
        v = v0 + (v1 - v0) * t
        col = int(math.floor(u))
        row_from_south = int(math.floor(v))
        row = terrain.nrows - 1 - row_from_south
        if 0 <= row < terrain.nrows and 0 <= col < terrain.ncols:
            cells.add((row, col))
    return cells


def rasterize_feature(feature: Feature, terrain: TerrainGrid) -> set[tuple[int, int]]:
    """Grid cells covered by a feature; empty (with a degenerate geometry
    accepted silently as such) when nothing is covered."""
    if feature.geometry_type == "polygon":
        cells: set[tuple[int, int]] = set()
        xs = [x for ring in feature.coordinates for x, _ in ring]
        ys = [y for ring in feature.coordinates for _, y in ring]
        if not xs:
            return cells
        cmin = max(0, int(math.floor((min(xs) - terrain.xllcorner) / terrain.cellsize)))
        cmax = min(terrain.ncols - 1, int(math.floor((max(xs) - terrain.xllcorner) / terrain.cellsize)))
        south_min = max(0, int(math.floor((min(ys) - terrain.yllcorner) / terrain.cellsize)))
        south_max = min(terrain.nrows - 1, int(math.floor((max(ys) - terrain.yllcorner) / terrain.cellsize)))
        for south in range(south_min, south_max + 1):
            row = terrain.nrows - 1 - south
            for col in range(cmin, cmax + 1):
                x, y = terrain.cell_center(row, col)
                if point_in_polygon(x, y, feature.coordinates):
                    cells.add((row, col))
        return cells
    if feature.geometry_type == "polyline":
        cells = set()
        for p0, p1 in zip(feature.coordinates, feature.coordinates[1:]):
            cells |= _segment_cells(terrain, p0, p1)
        return cells
    raise ValueError(f"cannot rasterize geometry type {feature.geometry_type!r}")


def assess(
    depth,
    terrain: TerrainGrid,
    features: FeatureSet,
    affect_threshold: float = DEFAULT_AFFECT_THRESHOLD,
) -> ImpactReport:
    """Per-feature depth statistics against one depth field.

    ``depth`` is a 2D array (metres per cell) or a FloodFrame, which is
    expanded back onto the grid first. Pure function of its inputs.
    """
    if isinstance(depth, FloodFrame):
        depth = depth_grid_from_frame(depth, terrain)
    depth = np.asarray(depth, dtype=np.float64)
    report = ImpactReport(affect_threshold=affect_threshold)
    for feature in features:
        cells = rasterize_feature(feature, terrain)
        if not cells:
            report.features.append(
                FeatureImpact(feature.id, feature.kind, False, 0.0, 0.0, "", out_of_extent=True)
            )
            continue
        values = [float(depth[r, c]) for r, c in sorted(cells)]
        max_depth = max(values)
        inundated = sum(1 for v in values if v > affect_threshold)
        affected = max_depth > affect_threshold
        report.features.append(
            FeatureImpact(
                id=feature.id,
                kind=feature.kind,
                affected=affected,
                max_depth=max_depth,
                inundated_fraction=inundated / len(values),
                depth_class=depth_class(max_depth) if affected else "",
            )
        )
    return report


def depth_grid_from_frame(frame: FloodFrame, terrain: TerrainGrid) -> np.ndarray:
    """Scatter a frame's per-vertex depths back onto the source cells.

    Frame vertices sit at cell centres in local coordinates, so the source
    cell is recoverable exactly.
    """
    depth = np.zeros((terrain.nrows, terrain.ncols))
    cs = frame.cellsize
    for k in range(frame.vertex_count):
        x = frame.vertex[3 * k]
        y = frame.vertex[3 * k + 1]
        col = int(math.floor(x / cs))
        row = terrain.nrows - 1 - int(math.floor(y / cs))
        if 0 <= row < terrain.nrows and 0 <= col < terrain.ncols:
            depth[row, col] = frame.depth_values[k]
    return depth


def report_to_csv(report: ImpactReport, sink=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["id", "kind", "affected", "max_depth", "fraction", "class"])
    for f in report.features:
        w.writerow([f.id, f.kind, f.affected, f"{f.max_depth:.4f}", f"{f.inundated_fraction:.4f}", f.depth_class])
    text = buf.getvalue()
    if sink is not None:
        sink.write(text)
    return text


def report_to_geojson(report: ImpactReport, features: FeatureSet) -> dict:
    """FeatureCollection with impact properties attached, for map overlay."""
    impacts = {f.id: f for f in report.features}
    out = []
    for feature in features:
        imp = impacts.get(feature.id)
        if feature.geometry_type == "polygon":
            geometry = {"type": "Polygon", "coordinates": [[list(p) for p in r] for r in feature.coordinates]}
        else:
            geometry = {"type": "LineString", "coordinates": [list(p) for p in feature.coordinates]}
        props = dict(feature.properties)
        props.update(
            kind=feature.kind,
            affected=imp.affected if imp else False,
            max_depth=imp.max_depth if imp else 0.0,
            inundated_fraction=imp.inundated_fraction if imp else 0.0,
            depth_class=imp.depth_class if imp else "",
        )
        out.append({"type": "Feature", "id": feature.id, "properties": props, "geometry": geometry})
    return {"type": "FeatureCollection", "features": out}
