"""Command-line front door: run, bench, impact, frame, serve.

Exit codes: 0 success, 1 validation/input error (including unknown flags),
2 runtime abort (unstable simulation).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import engine, impact as impact_mod, scheduling
from .frames import build_frame, frame_filename, serialize_frame
from .rasters import (
    FeatureError,
    RasterFormatError,
    TerrainGrid,
    load_geojson_features,
    read_ascii_grid,
    terrain_from_layers,
    write_ascii_grid,
)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floodca", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation, write frames and a report")
    run.add_argument("--dem", required=True, help="Esri ASCII DEM path")
    rough = run.add_mutually_exclusive_group()
    rough.add_argument("--roughness", help="Esri ASCII roughness raster path")
    rough.add_argument("--roughness-const", type=float, help="constant Manning roughness")
    run.add_argument("--config", required=True, help="JSON SimConfig path")
    run.add_argument("--out-dir", required=True, help="output directory")
    run.add_argument("--emit-asc", action="store_true", help="also write per-snapshot depth rasters")
    run.add_argument("--policy", choices=scheduling.POLICIES, help="override config scheduling")
    run.add_argument("--threads", type=int, help="override config threads")
    run.add_argument("--block-size", type=int, help="override config block size")
    run.add_argument("--crs-label", default="", help="CRS label recorded in frames")

    bench = sub.add_parser("bench", help="thread/block sweep against a serial baseline")
    bench.add_argument("--dem", required=True)
    bench.add_argument("--roughness-const", type=float, default=0.05)
    bench.add_argument("--config", required=True)
    bench.add_argument("--threads-list", default="1,2,4,8", help="comma-separated thread counts")
    bench.add_argument("--block-list", default="", help="comma-separated block sizes (default: one auto block)")
    bench.add_argument("--csv", help="write the sweep table here (default: stdout)")

    imp = sub.add_parser("impact", help="affected-feature analysis for a snapshot or frame series")
    src = imp.add_mutually_exclusive_group(required=True)
    src.add_argument("--frames-dir", help="directory of frame_*.json (max-depth envelope is assessed)")
    src.add_argument("--asc", help="single depth raster (.asc)")
    imp.add_argument("--features", required=True, help="GeoJSON feature collection")
    imp.add_argument("--threshold", type=float, default=impact_mod.DEFAULT_AFFECT_THRESHOLD)
    imp.add_argument("--dem", help="DEM defining the grid (optional with --asc, recommended with --frames-dir)")
    imp.add_argument("--out", required=True, help="output directory for impact.csv / impact.geojson")

    fr = sub.add_parser("frame", help="build one flood frame from a depth raster")
    fr.add_argument("--asc", required=True, help="depth raster (.asc)")
    fr.add_argument("--dem", required=True, help="DEM raster (.asc)")
    fr.add_argument("--out", required=True, help="frame JSON path")
    fr.add_argument("--wet-threshold", type=float, default=1e-4)

    srv = sub.add_parser("serve", help="start the frame-streaming server")
    srv.add_argument("--config", required=True, help="server config JSON")
    return p


def _load_terrain(dem_path: str, roughness_path: str | None, roughness_const: float | None, crs_label: str = "") -> TerrainGrid:
    dem = read_ascii_grid(dem_path)
    if roughness_path:
        return terrain_from_layers(dem, roughness=read_ascii_grid(roughness_path), crs_label=crs_label)
    return terrain_from_layers(dem, roughness_const=roughness_const if roughness_const is not None else 0.05, crs_label=crs_label)


def _cmd_run(args) -> int:
    terrain = _load_terrain(args.dem, args.roughness, args.roughness_const, args.crs_label)
    config = engine.load_config(args.config)
    overrides = {}
    if args.policy:
        overrides["scheduling"] = args.policy
    if args.threads:
        overrides["threads"] = args.threads
    if args.block_size:
        overrides["block_size"] = args.block_size
    if overrides:
        config = config.replace(**overrides)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def on_frame(step_index: int, frame) -> None:
        (out_dir / frame_filename(step_index)).write_bytes(serialize_frame(frame))
        if args.emit_asc:
            depth = impact_mod.depth_grid_from_frame(frame, terrain)
            write_ascii_grid(terrain.header_layer(depth), str(out_dir / f"depth_{step_index:06d}.asc"))

    try:
        report = engine.run(terrain, config, on_frame=on_frame)
    except engine.InstabilityError as exc:
        (out_dir / "run_report.json").write_text(exc.report.to_json())
        print(f"ABORT: {exc}", file=sys.stderr)
        return 2
    (out_dir / "run_report.json").write_text(report.to_json())
    print(
        f"finished: {report.steps_completed} steps, {report.frames_emitted} frames, "
        f"mass balance error {report.mass_balance_error:.2e}, wall {report.wall_parallel:.3f}s"
    )
    return 0


def _cmd_bench(args) -> int:
    terrain = _load_terrain(args.dem, None, args.roughness_const)
    config = engine.load_config(args.config)
    threads = [int(t) for t in args.threads_list.split(",") if t.strip()]
    if args.block_list.strip():
        blocks = [int(b) for b in args.block_list.split(",") if b.strip()]
    else:
        ncells = int(terrain.valid_mask.sum())
        blocks = [max(1, ncells // max(max(threads), 1) // 4)]
    # a single-thread sweep is just the serial baseline
    policies = () if threads == [1] and not args.block_list.strip() else ("static", "dynamic")
    rows = scheduling.measure_speedup(terrain, config, threads, blocks, policies=policies)
    csv_text = scheduling.sweep_to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(csv_text)
    else:
        print(csv_text, end="")
    best = scheduling.best_row(rows)
    print(
        f"best: policy={best.policy} threads={best.threads} block={best.block_size} "
        f"({best.wall_seconds:.3f}s, speedup {best.speedup:.2f})"
    )
    for key, value in scheduling.REFERENCE_POINTS.items():
        print(f"reference[{key}] = {value}")
    return 0


def _envelope_terrain(frames, features) -> TerrainGrid:
    """Smallest all-valid grid covering every frame vertex and feature."""
    cs = frames[0].cellsize
    xll = frames[0].xllcorner
    yll = frames[0].yllcorner
    max_x = max((f.vertex[3 * k] for f in frames for k in range(f.vertex_count)), default=cs)
    max_y = max((f.vertex[3 * k + 1] for f in frames for k in range(f.vertex_count)), default=cs)
    for feat in features:
        rings = feat.coordinates if feat.geometry_type == "polyline" else [p for ring in feat.coordinates for p in ring]
        pts = rings if feat.geometry_type == "polyline" else rings
        for x, y in pts:
            max_x = max(max_x, x - xll)
            max_y = max(max_y, y - yll)
    ncols = int(np.ceil(max_x / cs)) + 1
    nrows = int(np.ceil(max_y / cs)) + 1
    zeros = np.zeros((nrows, ncols))
    return TerrainGrid(
        ncols=ncols, nrows=nrows, xllcorner=xll, yllcorner=yll, cellsize=cs,
        nodata_value=-9999.0, elevation=zeros, roughness=np.full_like(zeros, 0.05),
    )


def _cmd_impact(args) -> int:
    features = load_geojson_features(args.features)
    if args.asc:
        layer = read_ascii_grid(args.asc)
        if args.dem:
            terrain = _load_terrain(args.dem, None, None)
        else:
            zeros = np.zeros_like(layer.values)
            terrain = TerrainGrid(
                ncols=layer.ncols, nrows=layer.nrows, xllcorner=layer.xllcorner,
                yllcorner=layer.yllcorner, cellsize=layer.cellsize, nodata_value=layer.nodata_value,
                elevation=zeros, roughness=np.full_like(zeros, 0.05),
            )
        depth = np.where(layer.values == layer.nodata_value, 0.0, layer.values)
    else:
        from .frames import parse_frame

        paths = sorted(Path(args.frames_dir).glob("frame_*.json"))
        if not paths:
            print(f"no frame_*.json files in {args.frames_dir}", file=sys.stderr)
            return 1
        frames = [parse_frame(p.read_bytes()) for p in paths]
        terrain = _load_terrain(args.dem, None, None) if args.dem else _envelope_terrain(frames, features)
        depth = np.zeros((terrain.nrows, terrain.ncols))
        for frame in frames:
            depth = np.maximum(depth, impact_mod.depth_grid_from_frame(frame, terrain))

    report = impact_mod.assess(depth, terrain, features, affect_threshold=args.threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "impact.csv").write_text(impact_mod.report_to_csv(report))
    (out / "impact.geojson").write_text(json.dumps(impact_mod.report_to_geojson(report, features), indent=2))
    counts = report.affected_counts
    total = sum(counts.values())
    print(f"affected features: {total} " + " ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return 0


def _cmd_frame(args) -> int:
    terrain = _load_terrain(args.dem, None, None)
    layer = read_ascii_grid(args.asc)
    if layer.header_tuple() != (terrain.ncols, terrain.nrows, terrain.xllcorner, terrain.yllcorner, terrain.cellsize):
        print("depth raster header does not match the DEM", file=sys.stderr)
        return 1
    depth = np.where(layer.values == layer.nodata_value, 0.0, layer.values)

    class _Snapshot:
        pass

    snap = _Snapshot()
    snap.depth = depth
    frame = build_frame(snap, terrain, wet_threshold=args.wet_threshold, information={"source": Path(args.asc).name})
    Path(args.out).write_bytes(serialize_frame(frame))
    print(f"wrote {args.out}: {frame.vertex_count} vertices, {len(frame.index) // 3} triangles")
    return 0


def _cmd_serve(args) -> int:
    from .server import ServerConfig, serve

    serve(ServerConfig.from_file(args.config))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; that's a validation failure here
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "impact":
            return _cmd_impact(args)
        if args.command == "frame":
            return _cmd_frame(args)
        if args.command == "serve":
            return _cmd_serve(args)
        return 1
    except (engine.ConfigValidationError, RasterFormatError, FeatureError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except engine.InstabilityError as exc:
        print(f"ABORT: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
