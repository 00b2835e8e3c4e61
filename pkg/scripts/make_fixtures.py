#!/usr/bin/env python3
"""Regenerate the bundled fixtures: synthetic valley DEM, demo features,
run config and server config. Deterministic — running it twice produces
byte-identical files."""

import json
from pathlib import Path

from floodca import synth
from floodca.rasters import write_ascii_grid

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)

    terrain = synth.valley(50, 50, cellsize=10.0)
    write_ascii_grid(synth.dem_layer(terrain), str(FIXTURES / "valley_dem_50x50.asc"))

    features = synth.demo_features(terrain)
    (FIXTURES / "features.geojson").write_text(json.dumps(features, indent=2) + "\n")

    config = {
        "dt": 1.0,
        "duration": 600.0,
        "snapshot_interval": 60.0,
        "gravity": 9.81,
        "inlet_cells": [[0, 23, "hydrograph"], [0, 24, "hydrograph"], [0, 25, "hydrograph"], [0, 26, "hydrograph"]],
        "hydrograph": [[0.0, 40.0], [240.0, 130.0], [600.0, 25.0]],
        "dry_threshold": 0.0001,
        "wet_rule_on": True,
        "scheduling": "serial",
        "threads": 1,
    }
    (FIXTURES / "run_config.json").write_text(json.dumps(config, indent=2) + "\n")

    server_dir = FIXTURES / "server"
    server_dir.mkdir(exist_ok=True)
    (server_dir / "datasets.json").write_text(
        json.dumps(
            {
                "valley": {
                    "dem": "../valley_dem_50x50.asc",
                    "roughness_const": 0.05,
                    "crs_label": "synthetic-utm",
                }
            },
            indent=2,
        )
        + "\n"
    )
    (FIXTURES / "server_config.json").write_text(
        json.dumps(
            {
                "dataset_dir": str(server_dir),
                "host": "127.0.0.1",
                "port": 8000,
                "max_jobs": 1,
            },
            indent=2,
        )
        + "\n"
    )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
