import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from floodca.rasters import (
    FeatureError,
    RasterFormatError,
    RasterLayer,
    load_geojson_features,
    read_ascii_grid,
    terrain_from_layers,
    write_ascii_grid,
)


def make_layer(values, cellsize=1.0, nodata=-9999.0, xll=0.0, yll=0.0):
    values = np.asarray(values, dtype=np.float64)
    return RasterLayer(
        ncols=values.shape[1],
        nrows=values.shape[0],
        xllcorner=xll,
        yllcorner=yll,
        cellsize=cellsize,
        nodata_value=nodata,
        values=values,
    )


def roundtrip(layer: RasterLayer) -> RasterLayer:
    buf = io.StringIO()
    write_ascii_grid(layer, buf)
    return read_ascii_grid(io.StringIO(buf.getvalue()))


def test_read_simple_2x2():
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n"
    layer = read_ascii_grid(io.StringIO(text))
    assert layer.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert layer.cellsize == 1.0
    assert layer.nodata_value == -9999.0


def test_header_keys_case_insensitive_and_nodata_spelling():
    text = "NCOLS 1\nNrows 1\nXLLCORNER 5\nyllcorner 6\nCellsize 2\nnodata_value -1\n7\n"
    layer = read_ascii_grid(io.StringIO(text))
    assert (layer.xllcorner, layer.yllcorner, layer.cellsize) == (5.0, 6.0, 2.0)
    assert layer.values[0, 0] == 7.0


def test_value_count_mismatch_reports_line():
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3\n"
    with pytest.raises(RasterFormatError, match="value count mismatch at line 8"):
        read_ascii_grid(io.StringIO(text))


def test_trailing_values_rejected_with_line():
    text = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1\n2\n"
    with pytest.raises(RasterFormatError, match="line 8"):
        read_ascii_grid(io.StringIO(text))


def test_non_numeric_token_reports_line():
    text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 abc\n"
    with pytest.raises(RasterFormatError, match="'abc' at line 7"):
        read_ascii_grid(io.StringIO(text))


def test_bad_cellsize_rejected():
    text = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 0\nNODATA_value -9999\n1\n"
    with pytest.raises(RasterFormatError, match="cellsize"):
        read_ascii_grid(io.StringIO(text))


def test_unknown_header_key_rejected():
    # e.g. a rectangular-cell dialect using xdim/ydim
    text = "ncols 1\nnrows 1\nxdim 1\nydim 2\ncellsize 1\nNODATA_value -9999\n1\n"
    with pytest.raises(RasterFormatError, match="unexpected header key 'xdim' at line 3"):
        read_ascii_grid(io.StringIO(text))


def test_write_1x1_zero_writes_bare_zero():
    buf = io.StringIO()
    write_ascii_grid(make_layer([[0.0]]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[-1] == "0"
    assert lines[0] == "ncols 1"


def test_nodata_cells_written_as_literal_token():
    buf = io.StringIO()
    write_ascii_grid(make_layer([[1.0, -9999.0]]), buf)
    assert buf.getvalue().splitlines()[-1] == "1 -9999"


def test_roundtrip_5x5_bit_for_bit():
    rng = np.random.default_rng(7)
    layer = make_layer(rng.normal(size=(5, 5)) * 123.456, cellsize=2.5, xll=3.25, yll=-17.5)
    again = roundtrip(layer)
    assert np.array_equal(again.values, layer.values)
    assert again.header_tuple() == layer.header_tuple()


@settings(max_examples=40, deadline=None)
@given(
    values=hnp.arrays(
        np.float64,
        st.tuples(st.integers(1, 10), st.integers(1, 10)),
        elements=st.floats(allow_nan=False, allow_infinity=False, width=64),
    ),
    cellsize=st.floats(min_value=1e-3, max_value=1e4, allow_nan=False),
    xll=st.floats(min_value=-1e7, max_value=1e7, allow_nan=False),
)
def test_roundtrip_property(values, cellsize, xll):
    layer = make_layer(values, cellsize=cellsize, xll=xll)
    again = roundtrip(layer)
    assert np.array_equal(again.values, layer.values)
    assert again.header_tuple() == layer.header_tuple()
    assert np.array_equal(again.nodata_mask(), layer.nodata_mask())


def test_invalid_mask_same_from_file_and_memory():
    values = np.array([[1.0, -9999.0], [-9999.0, 2.0]])
    layer = make_layer(values)
    again = roundtrip(layer)
    terrain_mem = terrain_from_layers(layer, roughness_const=0.05)
    terrain_file = terrain_from_layers(again, roughness_const=0.05)
    assert np.array_equal(terrain_mem.valid_mask, terrain_file.valid_mask)
    assert terrain_mem.valid_mask.tolist() == [[True, False], [False, True]]


def test_terrain_rejects_header_mismatch():
    dem = make_layer(np.zeros((2, 2)))
    rough = make_layer(np.full((2, 2), 0.05), cellsize=2.0)
    with pytest.raises(ValueError, match="header does not match"):
        terrain_from_layers(dem, roughness=rough)


def test_terrain_rejects_out_of_range_roughness():
    dem = make_layer(np.zeros((2, 2)))
    rough = make_layer(np.full((2, 2), 1.5))
    with pytest.raises(ValueError, match="must be nodata or in"):
        terrain_from_layers(dem, roughness=rough)


def test_roughness_constant_broadcast_honors_nodata():
    dem = make_layer(np.array([[1.0, -9999.0]]))
    terrain = terrain_from_layers(dem, roughness_const=0.07)
    assert terrain.roughness[0, 0] == 0.07
    assert terrain.roughness[0, 1] == -9999.0
    assert terrain.valid_mask.tolist() == [[True, False]]


def test_cell_center_mapping():
    dem = make_layer(np.zeros((3, 2)), cellsize=10.0, xll=100.0, yll=200.0)
    terrain = terrain_from_layers(dem, roughness_const=0.05)
    # row 0 is the northernmost row
    assert terrain.cell_center(0, 0) == (105.0, 225.0)
    assert terrain.cell_center(2, 1) == (115.0, 205.0)
    assert terrain.cell_of_point(105.0, 225.0) == (0, 0)
    assert terrain.cell_of_point(-1.0, 205.0) is None


GEOJSON_SQUARE = {
    "type": "FeatureCollection",
    "features": [
        {
            "type": "Feature",
            "id": "b1",
            "properties": {"kind": "building"},
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]],
            },
        }
    ],
}


def test_load_empty_collection():
    fs = load_geojson_features(io.StringIO('{"type": "FeatureCollection", "features": []}'))
    assert len(fs) == 0


def test_load_square_polygon():
    import json

    fs = load_geojson_features(io.StringIO(json.dumps(GEOJSON_SQUARE)))
    assert len(fs) == 1
    feat = fs.features[0]
    assert feat.kind == "building"
    ring = feat.coordinates[0]
    assert ring[0] == ring[-1]  # closed


def test_unclosed_ring_gets_closed():
    import json

    doc = json.loads(json.dumps(GEOJSON_SQUARE))
    doc["features"][0]["geometry"]["coordinates"] = [[[0, 0], [10, 0], [10, 10], [0, 10]]]
    fs = load_geojson_features(io.StringIO(json.dumps(doc)))
    ring = fs.features[0].coordinates[0]
    assert ring[0] == ring[-1]


def test_point_feature_rejected_with_id():
    import json

    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": "pt9",
                "properties": {},
                "geometry": {"type": "Point", "coordinates": [1, 2]},
            }
        ],
    }
    with pytest.raises(FeatureError, match="'pt9'"):
        load_geojson_features(io.StringIO(json.dumps(doc)))


def test_multipolygon_split_with_suffixes():
    import json

    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": "m",
                "properties": {"kind": "building"},
                "geometry": {
                    "type": "MultiPolygon",
                    "coordinates": [
                        [[[0, 0], [1, 0], [1, 1], [0, 0]]],
                        [[[5, 5], [6, 5], [6, 6], [5, 5]]],
                    ],
                },
            }
        ],
    }
    fs = load_geojson_features(io.StringIO(json.dumps(doc)))
    assert [f.id for f in fs] == ["m#0", "m#1"]


def test_linestring_default_kind_road():
    import json

    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {},
                "geometry": {"type": "LineString", "coordinates": [[0, 0], [5, 5]]},
            }
        ],
    }
    fs = load_geojson_features(io.StringIO(json.dumps(doc)))
    assert fs.features[0].kind == "road"
    assert fs.features[0].id == "feature_0"
