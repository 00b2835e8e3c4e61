#!/usr/bin/env python3
"""Scheduling study on a synthetic valley: thread sweep at a fixed block
size, then a block-size sweep at fixed threads. Writes two CSVs plus a
summary JSON next to them.

Usage:
    python scripts/bench_sweep.py [--size 1000] [--steps 200] [--out bench_out]

On a machine with >= 8 physical cores and the default 1000x1000 fixture this
reproduces the shape of the published study: speedup rising with threads and
flattening, dynamic at or below static wall time, and an interior optimum in
the block-size curve.
"""

import argparse
import json
import os
from pathlib import Path

from floodca import synth
from floodca.engine import InletCell, SimConfig
from floodca.scheduling import REFERENCE_POINTS, best_row, measure_speedup, sweep_to_csv


def scenario(size: int, steps: int):
    terrain = synth.valley(size, size, cellsize=10.0)
    mid = size // 2
    config = SimConfig(
        dt=1.0,
        duration=float(steps),
        snapshot_interval=float(steps),
        inlet_cells=tuple(InletCell(0, c, "hydrograph") for c in range(mid - 2, mid + 2)),
        hydrograph=((0.0, 1000.0), (float(steps), 8000.0)),
    )
    return terrain, config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--threads", default="1,2,4,8,12,16,20")
    ap.add_argument("--blocks", default="10000,30000,50000,70000,90000,100000")
    ap.add_argument("--block-fixed", type=int, default=70_000)
    ap.add_argument("--threads-fixed", type=int, default=0, help="0 = use cpu count")
    ap.add_argument("--out", default="bench_out")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cores = len(os.sched_getaffinity(0))
    terrain, config = scenario(args.size, args.steps)

    threads = [int(t) for t in args.threads.split(",")]
    print(f"[1/2] thread sweep on {args.size}x{args.size}, {args.steps} steps, block {args.block_fixed}")
    rows = measure_speedup(terrain, config, threads, [args.block_fixed])
    (out / "thread_sweep.csv").write_text(sweep_to_csv(rows))
    for r in rows:
        print(f"  {r.policy:8s} t={r.threads:2d}: {r.wall_seconds:7.2f}s speedup {r.speedup:5.2f} valid={r.valid}")

    fixed_threads = args.threads_fixed or cores
    blocks = [int(b) for b in args.blocks.split(",")]
    print(f"[2/2] block sweep at {fixed_threads} threads")
    block_rows = measure_speedup(terrain, config, [fixed_threads], blocks, policies=("dynamic",))
    (out / "block_sweep.csv").write_text(sweep_to_csv(block_rows))
    for r in block_rows:
        print(f"  {r.policy:8s} block={r.block_size:7d}: {r.wall_seconds:7.2f}s speedup {r.speedup:5.2f}")

    best = best_row(rows + block_rows)
    summary = {
        "cores": cores,
        "grid": [args.size, args.size],
        "steps": args.steps,
        "best": {
            "policy": best.policy,
            "threads": best.threads,
            "block_size": best.block_size,
            "wall_seconds": best.wall_seconds,
            "speedup": best.speedup,
        },
        "published_reference_points": REFERENCE_POINTS,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"best: {summary['best']}")
    print(f"wrote {out}/thread_sweep.csv, block_sweep.csv, summary.json")


if __name__ == "__main__":
    main()
