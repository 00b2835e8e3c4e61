"""Synthetic terrains and scenarios for tests, fixtures and benchmarks.

Everything here is deterministic. Elevations are built from dyadic
rationals (multiples of 1/64) wherever a test needs exact floating-point
cancellation — e.g. lake-at-rest stages.
"""

from __future__ import annotations

import numpy as np

from .rasters import RasterLayer, TerrainGrid

NODATA = -9999.0


def _grid(elevation: np.ndarray, cellsize: float, roughness: float, crs_label: str = "synthetic") -> TerrainGrid:
    nrows, ncols = elevation.shape
    rough = np.full_like(elevation, roughness)
    rough[elevation == NODATA] = NODATA
    return TerrainGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=0.0,
        yllcorner=0.0,
        cellsize=cellsize,
        nodata_value=NODATA,
        elevation=elevation,
        roughness=rough,
        crs_label=crs_label,
    )


def flat(nrows: int, ncols: int, cellsize: float = 1.0, roughness: float = 0.05) -> TerrainGrid:
    return _grid(np.zeros((nrows, ncols)), cellsize, roughness)


def bowl(n: int, cellsize: float = 1.0, rim: float = 4.0, roughness: float = 0.05) -> TerrainGrid:
    """Closed parabolic basin, exactly mirror-symmetric in both axes.

    Elevations are snapped to 1/64 m so symmetric cells carry bitwise equal
    values.
    """
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    center = (n - 1) / 2.0
    rr = ((r - center) ** 2 + (c - center) ** 2) / center**2
    e = np.round(rim * rr * 64.0) / 64.0
    return _grid(e, cellsize, roughness)


def valley(nrows: int = 50, ncols: int = 50, cellsize: float = 10.0, roughness: float = 0.05) -> TerrainGrid:
    """V-shaped valley dropping from north (row 0) to south, walls to the sides."""
    r = np.arange(nrows)[:, None]
    c = np.arange(ncols)[None, :]
    center = (ncols - 1) / 2.0
    cross = 6.0 * np.abs(c - center) / max(center, 1.0)  # valley walls
    down = 4.0 * (1.0 - r / max(nrows - 1, 1))  # bed slope, high at north
    e = np.round((cross + down) * 64.0) / 64.0
    return _grid(e, cellsize, roughness)


def lake_at_rest(n: int = 20, cellsize: float = 1.0, stage: float = 2.0, roughness: float = 0.05):
    """Uneven dyadic bed fully submerged at a uniform stage.

    Returns (terrain, initial_depth). The bed and the stage are exact
    binary fractions, so d + e reproduces the stage exactly per cell and
    the scheme's equilibrium is bitwise.
    """
    rng = np.random.default_rng(20210714)
    bed = rng.integers(0, 64, size=(n, n)) / 64.0  # in [0, 63/64]
    terrain = _grid(bed, cellsize, roughness)
    depth = stage - bed
    return terrain, depth


def cliff(n: int = 12, cellsize: float = 1.0, drop: float = 50.0, roughness: float = 0.05) -> TerrainGrid:
    """Plateau falling off a sheer step mid-grid — a CFL stress scene."""
    e = np.zeros((n, n))
    e[:, : n // 2] = drop
    return _grid(e, cellsize, roughness)


def with_nodata_border(terrain: TerrainGrid, width: int = 1) -> TerrainGrid:
    """Copy of a terrain whose outer cells are invalidated."""
    e = terrain.elevation.copy()
    rough = terrain.roughness.copy()
    for w in range(width):
        e[w, :] = e[-1 - w, :] = NODATA
        e[:, w] = e[:, -1 - w] = NODATA
        rough[w, :] = rough[-1 - w, :] = NODATA
        rough[:, w] = rough[:, -1 - w] = NODATA
    return TerrainGrid(
        ncols=terrain.ncols,
        nrows=terrain.nrows,
        xllcorner=terrain.xllcorner,
        yllcorner=terrain.yllcorner,
        cellsize=terrain.cellsize,
        nodata_value=NODATA,
        elevation=e,
        roughness=rough,
        crs_label=terrain.crs_label,
    )


def dem_layer(terrain: TerrainGrid) -> RasterLayer:
    return terrain.header_layer(terrain.elevation.copy())


def central_mound(terrain: TerrainGrid, height: float = 1.0, radius_cells: int = 3) -> np.ndarray:
    """Symmetric stepped mound of water depths (dyadic values) at grid centre."""
    nrows, ncols = terrain.nrows, terrain.ncols
    r = np.arange(nrows)[:, None]
    c = np.arange(ncols)[None, :]
    rc = (nrows - 1) / 2.0
    cc = (ncols - 1) / 2.0
    dist2 = (r - rc) ** 2 + (c - cc) ** 2
    d = np.maximum(0.0, 1.0 - dist2 / max(radius_cells, 1) ** 2)
    return np.round(d * height * 64.0) / 64.0


def demo_features(terrain: TerrainGrid) -> dict:
    """GeoJSON FeatureCollection of buildings/roads laid out in the valley."""
    cs = terrain.cellsize
    width = terrain.ncols * cs
    height = terrain.nrows * cs

    def square(cx, cy, half):
        return [
            [
                [cx - half, cy - half],
                [cx + half, cy - half],
                [cx + half, cy + half],
                [cx - half, cy + half],
                [cx - half, cy - half],
            ]
        ]

    feats = []
    for i, (fx, fy) in enumerate([(0.42, 0.3), (0.58, 0.45), (0.35, 0.6), (0.66, 0.7)]):
        feats.append(
            {
                "type": "Feature",
                "id": f"building_{i}",
                "properties": {"kind": "building", "name": f"House {i}"},
                "geometry": {"type": "Polygon", "coordinates": square(fx * width, fy * height, 1.5 * cs)},
            }
        )
    feats.append(
        {
            "type": "Feature",
            "id": "road_0",
            "properties": {"kind": "road", "name": "Valley road"},
            "geometry": {
                "type": "LineString",
                "coordinates": [[0.2 * width, 0.2 * height], [0.5 * width, 0.5 * height], [0.8 * width, 0.55 * height]],
            },
        }
    )
    feats.append(
        {
            "type": "Feature",
            "id": "pump_station",
            "properties": {"kind": "infrastructure", "name": "Pump station"},
            "geometry": {"type": "Polygon", "coordinates": square(0.5 * width, 0.12 * height, cs)},
        }
    )
    return {"type": "FeatureCollection", "features": feats}
