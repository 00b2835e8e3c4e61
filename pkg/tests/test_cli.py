import json
from pathlib import Path

import numpy as np
import pytest

from floodca import synth
from floodca.cli import main
from floodca.rasters import write_ascii_grid

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def quick_config(tmp_path):
    cfg = {
        "dt": 1.0,
        "duration": 30.0,
        "snapshot_interval": 10.0,
        "inlet_cells": [[0, 24, "hydrograph"], [0, 25, "hydrograph"]],
        "hydrograph": [[0.0, 40.0], [600.0, 40.0]],
        "wet_rule_on": True,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


def test_run_smoke_on_bundled_valley(tmp_path, quick_config):
    out = tmp_path / "out"
    code = run_cli(
        "run",
        "--dem", str(FIXTURES / "valley_dem_50x50.asc"),
        "--roughness-const", "0.05",
        "--config", quick_config,
        "--out-dir", str(out),
        "--emit-asc",
    )
    assert code == 0
    assert (out / "run_report.json").exists()
    frames = sorted(out.glob("frame_*.json"))
    assert [f.name for f in frames] == ["frame_000000.json", "frame_000010.json", "frame_000020.json", "frame_000030.json"]
    assert sorted(p.name for p in out.glob("depth_*.asc"))[0] == "depth_000000.asc"
    report = json.loads((out / "run_report.json").read_text())
    assert report["steps_completed"] == 30
    assert report["peak_flow"] == 40.0


def test_missing_dem_flag_exit_1(capsys):
    code = run_cli("run", "--config", "x.json", "--out-dir", "y")
    assert code == 1
    assert "--dem" in capsys.readouterr().err


def test_nonexistent_dem_exit_1(tmp_path, quick_config, capsys):
    code = run_cli("run", "--dem", str(tmp_path / "nope.asc"), "--config", quick_config, "--out-dir", str(tmp_path / "o"))
    assert code == 1


def test_unknown_flag_exit_1(capsys):
    assert run_cli("run", "--bogus") == 1


def test_help_exit_0():
    assert run_cli("--help") == 0


def test_policy_override_identical_output(tmp_path, quick_config):
    outs = []
    for name, extra in [("serial", []), ("dynamic", ["--policy", "dynamic", "--threads", "4", "--block-size", "300"])]:
        out = tmp_path / name
        code = run_cli(
            "run",
            "--dem", str(FIXTURES / "valley_dem_50x50.asc"),
            "--config", quick_config,
            "--out-dir", str(out),
            *extra,
        )
        assert code == 0
        outs.append({p.name: p.read_bytes() for p in out.glob("frame_*.json")})
    assert outs[0] == outs[1]


def test_unstable_run_exit_2(tmp_path, capsys):
    dem = tmp_path / "cliff.asc"
    write_ascii_grid(synth.dem_layer(synth.cliff(10, drop=50.0)), str(dem))
    dt = 100.0 / np.sqrt(9.81 * 5.0)
    cfg = {
        "dt": dt,
        "duration": dt * 5000,
        "snapshot_interval": dt * 1000,
        "inlet_cells": [[r, c, "fixed_depth"] for r in range(10) for c in range(5)],
        "inlet_depth": 5.0,
    }
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = run_cli("run", "--dem", str(dem), "--config", str(cfg_path), "--out-dir", str(out))
    assert code == 2
    assert "unstable" in capsys.readouterr().err
    assert (out / "run_report.json").exists()


def test_bench_single_thread_single_row(tmp_path, capsys):
    dem = tmp_path / "bowl.asc"
    write_ascii_grid(synth.dem_layer(synth.bowl(15)), str(dem))
    cfg = {
        "dt": 0.05,
        "duration": 1.0,
        "snapshot_interval": 1.0,
        "inlet_cells": [[7, 7, "hydrograph"]],
        "hydrograph": [[0.0, 1.0], [10.0, 1.0]],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    csv_path = tmp_path / "sweep.csv"
    code = run_cli("bench", "--dem", str(dem), "--config", str(cfg_path), "--threads-list", "1", "--csv", str(csv_path))
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "policy,threads,block_size,wall_seconds,speedup,valid"
    assert len(lines) == 2  # just the serial baseline
    assert lines[1].startswith("serial,1,")
    assert ",1.0000,True" in lines[1]
    assert "best:" in capsys.readouterr().out


def test_bench_sweep_rows_valid(tmp_path, capsys):
    dem = tmp_path / "bowl.asc"
    write_ascii_grid(synth.dem_layer(synth.bowl(15)), str(dem))
    cfg = {
        "dt": 0.05,
        "duration": 0.5,
        "snapshot_interval": 0.5,
        "inlet_cells": [[7, 7, "hydrograph"]],
        "hydrograph": [[0.0, 1.0], [10.0, 1.0]],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = run_cli("bench", "--dem", str(dem), "--config", str(cfg_path), "--threads-list", "1,2", "--block-list", "64")
    out = capsys.readouterr().out
    assert code == 0
    for line in out.strip().splitlines():
        if line.startswith(("static", "dynamic", "serial")):
            assert line.endswith("True")


def test_impact_all_dry_empty(tmp_path, capsys):
    dem = tmp_path / "flat.asc"
    terrain = synth.flat(10, 10, cellsize=10.0)
    write_ascii_grid(synth.dem_layer(terrain), str(dem))
    depth = tmp_path / "depth.asc"
    write_ascii_grid(terrain.header_layer(np.zeros((10, 10))), str(depth))
    features = tmp_path / "features.geojson"
    features.write_text(json.dumps(synth.demo_features(terrain)))
    out = tmp_path / "impact"
    code = run_cli("impact", "--asc", str(depth), "--features", str(features), "--out", str(out))
    assert code == 0
    assert "affected features: 0" in capsys.readouterr().out
    assert (out / "impact.csv").exists()
    assert (out / "impact.geojson").exists()


def test_impact_from_frames_dir(tmp_path, quick_config, capsys):
    out = tmp_path / "run"
    run_cli(
        "run",
        "--dem", str(FIXTURES / "valley_dem_50x50.asc"),
        "--config", quick_config,
        "--out-dir", str(out),
    )
    impact_out = tmp_path / "impact"
    code = run_cli(
        "impact",
        "--frames-dir", str(out),
        "--features", str(FIXTURES / "features.geojson"),
        "--dem", str(FIXTURES / "valley_dem_50x50.asc"),
        "--out", str(impact_out),
    )
    assert code == 0
    csv_text = (impact_out / "impact.csv").read_text()
    assert "building_0" in csv_text


def test_frame_matches_golden(tmp_path):
    golden = Path(__file__).parent / "data" / "golden_frame_2x2.json"
    terrain = synth.flat(6, 6, cellsize=1.0)
    dem = tmp_path / "dem.asc"
    write_ascii_grid(synth.dem_layer(terrain), str(dem))
    depth = np.zeros((6, 6))
    depth[2:4, 2:4] = 1.0
    depth_asc = tmp_path / "depth.asc"
    write_ascii_grid(terrain.header_layer(depth), str(depth_asc))
    out = tmp_path / "frame.json"
    code = run_cli("frame", "--asc", str(depth_asc), "--dem", str(dem), "--out", str(out))
    assert code == 0
    got = json.loads(out.read_bytes())
    want = json.loads(golden.read_bytes())
    for key in ("xllcorner", "yllcorner", "cellsize", "vertex", "index", "depth"):
        assert got[key] == want[key]


def test_frame_header_mismatch_exit_1(tmp_path, capsys):
    terrain = synth.flat(6, 6)
    other = synth.flat(5, 5)
    dem = tmp_path / "dem.asc"
    depth = tmp_path / "depth.asc"
    write_ascii_grid(synth.dem_layer(terrain), str(dem))
    write_ascii_grid(synth.dem_layer(other), str(depth))
    assert run_cli("frame", "--asc", str(depth), "--dem", str(dem), "--out", str(tmp_path / "f.json")) == 1
