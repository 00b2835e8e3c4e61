"""floodca: parallel cellular-automaton flood simulation and representation."""

from .engine import (
    ConfigValidationError,
    FloodState,
    InletCell,
    InstabilityError,
    MassLedger,
    SimConfig,
    initialize,
    load_config,
    run,
    step,
)
from .frames import FloodFrame, build_frame, depth_to_color_index, parse_frame, serialize_frame
from .impact import ImpactReport, assess, rasterize_feature
from .rasters import (
    FeatureSet,
    RasterLayer,
    TerrainGrid,
    load_geojson_features,
    read_ascii_grid,
    terrain_from_layers,
    write_ascii_grid,
)
from .scheduling import BlockPlan, PassExecutor, RunReport, measure_speedup, partition

__version__ = "0.1.0"
