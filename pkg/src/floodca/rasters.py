"""Georeferenced raster and vector feature I/O.

Rasters use the Esri ASCII grid format (six header lines followed by
``nrows`` lines of ``ncols`` values). Row 0 of every in-memory array is the
northernmost row, exactly as stored in the file, so the centre of cell
``(row, col)`` sits at::

    x = xllcorner + (col + 0.5) * cellsize
    y = yllcorner + (nrows - 1 - row + 0.5) * cellsize

Vector features (buildings, roads, infrastructure) come from GeoJSON
FeatureCollections in the same projected CRS as the rasters. No coordinate
transformation is ever performed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")

FEATURE_KINDS = ("building", "road", "infrastructure")


class RasterFormatError(ValueError):
    """Malformed Esri ASCII grid; message carries the offending line number."""


class FeatureError(ValueError):
    """Unsupported or malformed GeoJSON feature."""


@dataclass
class RasterLayer:
    """One georeferenced raster band: header plus row-major float array."""

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata_value: float
    values: np.ndarray  # shape (nrows, ncols), row 0 = north

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.ncols < 1 or self.nrows < 1:
            raise RasterFormatError("ncols and nrows must be >= 1")
        if self.cellsize <= 0:
            raise RasterFormatError("cellsize must be > 0")
        if self.values.shape != (self.nrows, self.ncols):
            raise RasterFormatError(
                f"array shape {self.values.shape} does not match header "
                f"({self.nrows} rows x {self.ncols} cols)"
            )

    def header_tuple(self):
        return (self.ncols, self.nrows, self.xllcorner, self.yllcorner, self.cellsize)

    def nodata_mask(self) -> np.ndarray:
        return self.values == self.nodata_value


@dataclass
class TerrainGrid:
    """Elevation + Manning roughness rasters defining the cell space.

    Cells whose elevation (or roughness) equals the nodata value are invalid
    and excluded from simulation. Cells are square: dx = dy = cellsize.
    """

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata_value: float
    elevation: np.ndarray
    roughness: np.ndarray
    crs_label: str = ""

    def __post_init__(self):
        self.elevation = np.asarray(self.elevation, dtype=np.float64)
        self.roughness = np.asarray(self.roughness, dtype=np.float64)
        shape = (self.nrows, self.ncols)
        if self.elevation.shape != shape or self.roughness.shape != shape:
            raise ValueError("elevation and roughness must both be nrows x ncols")
        if self.cellsize <= 0:
            raise ValueError("cellsize must be > 0")
        rough_ok = (self.roughness == self.nodata_value) | (
            (self.roughness > 0.0) & (self.roughness < 1.0)
        )
        if not rough_ok.all():
            bad = np.argwhere(~rough_ok)[0]
            raise ValueError(
                f"roughness at (row {bad[0]}, col {bad[1]}) is "
                f"{self.roughness[bad[0], bad[1]]}; must be nodata or in (0, 1)"
            )

    @property
    def valid_mask(self) -> np.ndarray:
        """True where the cell takes part in the simulation."""
        return (self.elevation != self.nodata_value) & (self.roughness != self.nodata_value)

    @property
    def cell_area(self) -> float:
        return self.cellsize * self.cellsize

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        x = self.xllcorner + (col + 0.5) * self.cellsize
        y = self.yllcorner + (self.nrows - 1 - row + 0.5) * self.cellsize
        return x, y

    def cell_of_point(self, x: float, y: float) -> tuple[int, int] | None:
        """Grid cell containing (x, y), or None when outside the extent."""
        col = int(math.floor((x - self.xllcorner) / self.cellsize))
        row_from_south = int(math.floor((y - self.yllcorner) / self.cellsize))
        row = self.nrows - 1 - row_from_south
        if 0 <= row < self.nrows and 0 <= col < self.ncols:
            return row, col
        return None

    def in_grid(self, row: int, col: int) -> bool:
        return 0 <= row < self.nrows and 0 <= col < self.ncols

    def header_layer(self, values: np.ndarray) -> RasterLayer:
        """Wrap an array in a layer sharing this grid's georeferencing."""
        return RasterLayer(
            ncols=self.ncols,
            nrows=self.nrows,
            xllcorner=self.xllcorner,
            yllcorner=self.yllcorner,
            cellsize=self.cellsize,
            nodata_value=self.nodata_value,
            values=values,
        )


@dataclass
class Feature:
    id: str
    kind: str  # one of FEATURE_KINDS
    geometry_type: str  # "polygon" | "polyline"
    # polygon: list of rings (first = exterior), each a closed list of (x, y);
    # polyline: single list of (x, y) vertices
    coordinates: list
    properties: dict = field(default_factory=dict)


@dataclass
class FeatureSet:
    features: list[Feature] = field(default_factory=list)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)


def _format_value(v: float) -> str:
    """Shortest token that re-parses to the exact same float."""
    if math.isfinite(v) and v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def read_ascii_grid(source: IO | str) -> RasterLayer:
    """Parse an Esri ASCII grid from a path, text stream or byte stream.

    Header keys are case-insensitive; both NODATA_value and nodata_value
    spellings are accepted. Every malformed-input error names the 1-based
    line on which it was detected.
    """
    close = False
    if isinstance(source, str):
        source = open(source, "r", encoding="ascii")
        close = True
    try:
        raw = source.read()
    finally:
        if close:
            source.close()
    if isinstance(raw, bytes):
        raw = raw.decode("ascii")
    lines = raw.splitlines()

    header: dict[str, float] = {}
    line_no = 0
    for expected in HEADER_KEYS:
        line_no += 1
        if line_no > len(lines):
            raise RasterFormatError(f"missing header line {line_no} ({expected})")
        parts = lines[line_no - 1].split()
        if len(parts) != 2:
            raise RasterFormatError(f"malformed header at line {line_no}: {lines[line_no - 1]!r}")
        key = parts[0].lower()
        if key != expected:
            raise RasterFormatError(
                f"unexpected header key {parts[0]!r} at line {line_no} (expected {expected})"
            )
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise RasterFormatError(f"non-numeric header value at line {line_no}: {parts[1]!r}")

    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if header["ncols"] != ncols or header["nrows"] != nrows or ncols < 1 or nrows < 1:
        raise RasterFormatError("ncols/nrows must be positive integers (header lines 1-2)")
    if header["cellsize"] <= 0:
        raise RasterFormatError("cellsize must be > 0 at line 5")

    values = np.empty((nrows, ncols), dtype=np.float64)
    for r in range(nrows):
        line_no += 1
        if line_no > len(lines):
            raise RasterFormatError(f"value count mismatch at line {line_no}: file ends early")
        tokens = lines[line_no - 1].split()
        if len(tokens) != ncols:
            raise RasterFormatError(
                f"value count mismatch at line {line_no}: got {len(tokens)} values, expected {ncols}"
            )
        for c, tok in enumerate(tokens):
            try:
                values[r, c] = float(tok)
            except ValueError:
                raise RasterFormatError(f"non-numeric token {tok!r} at line {line_no}")

    for extra in range(line_no, len(lines)):
        if lines[extra].strip():
            raise RasterFormatError(f"value count mismatch at line {extra + 1}: trailing data")

    return RasterLayer(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata_value=header["nodata_value"],
        values=values,
    )


def write_ascii_grid(layer: RasterLayer, sink: IO | str) -> None:
    """Write a layer as an Esri ASCII grid, north row first.

    Values are printed with round-trip precision, so
    read_ascii_grid(write_ascii_grid(layer)) reproduces the array exactly.
    """
    close = False
    if isinstance(sink, str):
        sink = open(sink, "w", encoding="ascii")
        close = True
    try:
        sink.write(f"ncols {layer.ncols}\n")
        sink.write(f"nrows {layer.nrows}\n")
        sink.write(f"xllcorner {_format_value(layer.xllcorner)}\n")
        sink.write(f"yllcorner {_format_value(layer.yllcorner)}\n")
        sink.write(f"cellsize {_format_value(layer.cellsize)}\n")
        sink.write(f"NODATA_value {_format_value(layer.nodata_value)}\n")
        for r in range(layer.nrows):
            sink.write(" ".join(_format_value(v) for v in layer.values[r]))
            sink.write("\n")
    finally:
        if close:
            sink.close()


def terrain_from_layers(
    dem: RasterLayer,
    roughness: RasterLayer | None = None,
    roughness_const: float | None = None,
    crs_label: str = "",
) -> TerrainGrid:
    """Assemble a TerrainGrid from a DEM plus a roughness raster or constant.

    A roughness raster must share the DEM's header exactly; a constant is
    broadcast over the grid (nodata wherever the DEM is nodata).
    """
    if (roughness is None) == (roughness_const is None):
        raise ValueError("provide exactly one of a roughness layer or a constant")
    if roughness is not None:
        if roughness.header_tuple() != dem.header_tuple():
            raise ValueError(
                "roughness header does not match DEM header "
                f"({roughness.header_tuple()} vs {dem.header_tuple()})"
            )
        rough = roughness.values.copy()
        # unify the nodata sentinel so TerrainGrid carries a single value
        if roughness.nodata_value != dem.nodata_value:
            rough[rough == roughness.nodata_value] = dem.nodata_value
    else:
        if not (0.0 < roughness_const < 1.0):
            raise ValueError(f"constant roughness {roughness_const} must be in (0, 1)")
        rough = np.full_like(dem.values, roughness_const)
        rough[dem.nodata_mask()] = dem.nodata_value
    return TerrainGrid(
        ncols=dem.ncols,
        nrows=dem.nrows,
        xllcorner=dem.xllcorner,
        yllcorner=dem.yllcorner,
        cellsize=dem.cellsize,
        nodata_value=dem.nodata_value,
        elevation=dem.values.copy(),
        roughness=rough,
        crs_label=crs_label,
    )


def _close_ring(ring: list) -> list[tuple[float, float]]:
    pts = [(float(x), float(y)) for x, y in ring]
    if pts and pts[0] != pts[-1]:
        pts.append(pts[0])
    return pts


def _check_finite(feature_id: str, pts: Iterable[tuple[float, float]]) -> None:
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FeatureError(f"feature {feature_id!r} has a non-finite coordinate")


def load_geojson_features(source: IO | str) -> FeatureSet:
    """Load Polygon/MultiPolygon/LineString features from a GeoJSON document.

    MultiPolygons are split into one feature per polygon with ``#n`` id
    suffixes. The feature kind comes from the ``kind`` property, defaulting
    to building for polygons and road for polylines.
    """
    close = False
    if isinstance(source, str):
        source = open(source, "r", encoding="utf-8")
        close = True
    try:
        doc = json.load(source)
    except json.JSONDecodeError as exc:
        raise FeatureError(f"unparsable GeoJSON document: {exc}") from exc
    finally:
        if close:
            source.close()

    if doc.get("type") != "FeatureCollection":
        raise FeatureError("document is not a GeoJSON FeatureCollection")

    out: list[Feature] = []
    for n, feat in enumerate(doc.get("features", [])):
        props = dict(feat.get("properties") or {})
        fid = str(feat.get("id", props.get("id", f"feature_{n}")))
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon":
            kind = props.get("kind", "building")
            rings = [_close_ring(r) for r in coords]
            for ring in rings:
                _check_finite(fid, ring)
            out.append(Feature(fid, _check_kind(fid, kind), "polygon", rings, props))
        elif gtype == "MultiPolygon":
            kind = props.get("kind", "building")
            for p, poly in enumerate(coords):
                rings = [_close_ring(r) for r in poly]
                for ring in rings:
                    _check_finite(fid, ring)
                out.append(Feature(f"{fid}#{p}", _check_kind(fid, kind), "polygon", rings, props))
        elif gtype == "LineString":
            kind = props.get("kind", "road")
            pts = [(float(x), float(y)) for x, y in coords]
            _check_finite(fid, pts)
            out.append(Feature(fid, _check_kind(fid, kind), "polyline", pts, props))
        else:
            raise FeatureError(f"unsupported geometry type {gtype!r} on feature {fid!r}")
    return FeatureSet(out)


def _check_kind(fid: str, kind: str) -> str:
    if kind not in FEATURE_KINDS:
        raise FeatureError(f"feature {fid!r} has unknown kind {kind!r}")
    return kind
