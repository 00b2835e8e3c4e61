"""Cellular-automaton flood engine: state, configuration and the step loop.

Each valid cell carries water depth d (m), bed elevation e (m), Manning
roughness r, and the single-width fluxes M, N (m^2/s) on the two faces it
owns (see floodca._kernels for the face storage convention). One step runs,
in fixed order:

1. inlet injection (fixed-depth top-up or hydrograph discharge),
2. the flux pass (new M, N from time-t depths) — parallel task 1,
3. the depth pass (new d from the new fluxes) — parallel task 2,
4. the optional wet/dry neighbour rule,
5. the mass-ledger update, then t += dt.

The two passes are double buffered: the flux pass reads only time-t fields,
the depth pass reads only the new fluxes, so cells update independently and
the result is a pure function of (state, terrain, config) no matter how the
work is scheduled.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace, asdict
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .frames import FloodFrame, build_frame
from .rasters import TerrainGrid
from .scheduling import BlockPlan, PassExecutor, RunReport, partition, autotune_block_size

logger = logging.getLogger(__name__)

INLET_MODES = ("fixed_depth", "hydrograph")


class ConfigValidationError(ValueError):
    """Configuration rejected; carries (field, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{f}: {m}" for f, m in errors))


class InstabilityError(RuntimeError):
    """A non-finite intermediate appeared — the time step is unstable."""

    def __init__(self, step_index: int, cell: tuple[int, int], last_frame: FloodFrame | None, report: RunReport):
        self.step_index = step_index
        self.cell = cell
        self.last_frame = last_frame  # last stable snapshot, if any was emitted
        self.report = report
        super().__init__(
            f"non-finite value at cell (row {cell[0]}, col {cell[1]}) during step {step_index}; "
            "the configured dt is unstable for this terrain"
        )


@dataclass(frozen=True)
class InletCell:
    row: int
    col: int
    mode: str  # fixed_depth | hydrograph


@dataclass(frozen=True)
class SimConfig:
    """All knobs of one simulation run. JSON keys match field names exactly."""

    dt: float  # s
    duration: float  # s
    snapshot_interval: float  # s, integer multiple of dt
    gravity: float = 9.81  # m/s^2
    inlet_cells: tuple[InletCell, ...] = ()
    inlet_depth: float = 0.0  # m, held at fixed_depth inlets
    hydrograph: tuple[tuple[float, float], ...] = ()  # (time s, discharge m^3/s)
    total_discharge: float | None = None  # m^3 inflow budget
    dry_threshold: float = 1e-4  # m
    wet_rule_on: bool = False
    scheduling: str = "serial"  # serial | static | dynamic
    threads: int = 1
    block_size: int | None = None  # cells per task block; None = auto-tune

    def replace(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)

    @staticmethod
    def from_dict(doc: dict) -> "SimConfig":
        doc = dict(doc)
        inlets = []
        for item in doc.pop("inlet_cells", []):
            if isinstance(item, dict):
                inlets.append(InletCell(int(item["row"]), int(item["col"]), str(item["mode"])))
            else:
                r, c, mode = item
                inlets.append(InletCell(int(r), int(c), str(mode)))
        hydro = tuple((float(t), float(q)) for t, q in doc.pop("hydrograph", []))
        known = {f for f in SimConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigValidationError([(k, "unknown config key") for k in sorted(unknown)])
        return SimConfig(inlet_cells=tuple(inlets), hydrograph=hydro, **doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inlet_cells"] = [[i.row, i.col, i.mode] for i in self.inlet_cells]
        d["hydrograph"] = [[t, q] for t, q in self.hydrograph]
        return d

    def validate(self, terrain: TerrainGrid) -> None:
        """Raise ConfigValidationError listing every violated constraint."""
        errors: list[tuple[str, str]] = []
        if self.dt <= 0:
            errors.append(("dt", "must be > 0"))
        if self.duration <= 0:
            errors.append(("duration", "must be > 0"))
        if self.gravity <= 0:
            errors.append(("gravity", "must be > 0"))
        if self.dry_threshold <= 0:
            errors.append(("dry_threshold", "must be > 0"))
        if self.dt > 0:
            ratio = self.snapshot_interval / self.dt
            if self.snapshot_interval <= 0 or abs(ratio - round(ratio)) > 1e-9:
                errors.append(("snapshot_interval", f"must be a positive integer multiple of dt={self.dt}"))
        if self.scheduling not in ("serial", "static", "dynamic"):
            errors.append(("scheduling", f"unknown policy {self.scheduling!r}"))
        if self.threads < 1:
            errors.append(("threads", "must be >= 1"))
        if self.block_size is not None and self.block_size < 1:
            errors.append(("block_size", "must be >= 1"))
        valid = terrain.valid_mask
        uses_hydrograph = False
        for i, inlet in enumerate(self.inlet_cells):
            name = f"inlet_cells[{i}]"
            if inlet.mode not in INLET_MODES:
                errors.append((name, f"unknown mode {inlet.mode!r}"))
                continue
            if not terrain.in_grid(inlet.row, inlet.col):
                errors.append((name, f"({inlet.row}, {inlet.col}) is outside the {terrain.nrows}x{terrain.ncols} grid"))
            elif not valid[inlet.row, inlet.col]:
                errors.append((name, f"({inlet.row}, {inlet.col}) is an invalid (nodata) cell"))
            if inlet.mode == "hydrograph":
                uses_hydrograph = True
        if uses_hydrograph and not self.hydrograph:
            errors.append(("hydrograph", "empty while an inlet uses mode=hydrograph"))
        times = [t for t, _ in self.hydrograph]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            errors.append(("hydrograph", "breakpoint times must be strictly increasing"))
        if any(q < 0 for _, q in self.hydrograph):
            errors.append(("hydrograph", "discharges must be >= 0"))
        if self.inlet_depth < 0:
            errors.append(("inlet_depth", "must be >= 0"))
        if self.total_discharge is not None and self.total_discharge < 0:
            errors.append(("total_discharge", "must be >= 0"))
        if errors:
            raise ConfigValidationError(errors)


def load_config(source) -> SimConfig:
    """Read a SimConfig from a JSON file path or stream."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as f:
            doc = json.load(f)
    else:
        doc = json.load(source)
    return SimConfig.from_dict(doc)


@dataclass
class MassLedger:
    """Running water balance: inflow = stored + residual, exactly, every step.

    volume_in counts initial water plus everything the inlets injected;
    volume_stored is the current sum of d*cell_area over valid cells;
    volume_residual is their difference. The diagnostic fields split the
    residual's physical sources: depth clamping creates water, the wet/dry
    rule both creates and removes it.
    """

    volume_in: float = 0.0  # m^3
    volume_stored: float = 0.0  # m^3
    volume_residual: float = 0.0  # m^3
    clamp_volume: float = 0.0  # m^3 created by negative-depth clamps
    clamp_events: int = 0
    wetdry_added: float = 0.0  # m^3 created forcing cells wet
    wetdry_removed: float = 0.0  # m^3 removed forcing cells dry

    def refresh(self, stored: float) -> None:
        self.volume_stored = stored
        self.volume_residual = self.volume_in - stored

    def relative_error(self) -> float:
        """Unaccounted drift relative to what the sources say should be stored."""
        expected = self.volume_in + self.clamp_volume + self.wetdry_added - self.wetdry_removed
        scale = max(abs(expected), abs(self.volume_stored), 1e-30)
        return abs(self.volume_stored - expected) / scale


class FloodState:
    """Double-buffered dynamic fields: depth d, face fluxes M and N, time t."""

    def __init__(self, terrain: TerrainGrid, dry_threshold: float):
        shape = (terrain.nrows, terrain.ncols)
        self._d = [np.zeros(shape), np.zeros(shape)]
        self._m = [np.zeros(shape), np.zeros(shape)]
        self._n = [np.zeros(shape), np.zeros(shape)]
        self._cur = 0
        self.time = 0.0
        self.step_index = 0
        self.valid = terrain.valid_mask
        self.dry_threshold = dry_threshold
        # row-major coordinates of the valid cells, shared by every pass
        flat = np.flatnonzero(self.valid.ravel())
        self.cell_rows = (flat // terrain.ncols).astype(np.int32)
        self.cell_cols = (flat % terrain.ncols).astype(np.int32)

    @property
    def depth(self) -> np.ndarray:
        return self._d[self._cur]

    @property
    def flux_x(self) -> np.ndarray:
        return self._m[self._cur]

    @property
    def flux_y(self) -> np.ndarray:
        return self._n[self._cur]

    @property
    def wet_mask(self) -> np.ndarray:
        return (self.depth > self.dry_threshold) & self.valid

    def next_buffers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nxt = 1 - self._cur
        return self._d[nxt], self._m[nxt], self._n[nxt]

    def swap(self) -> None:
        self._cur = 1 - self._cur

    @property
    def ncells(self) -> int:
        return int(self.cell_rows.size)


def peak_flow(config: SimConfig) -> float:
    """Maximum hydrograph discharge (m^3/s); 0 without a hydrograph."""
    return max((q for _, q in config.hydrograph), default=0.0)


def drainage_time(config: SimConfig) -> float:
    """Inflow budget divided by the mean hydrograph discharge, when a budget
    is given; otherwise the hydrograph's last breakpoint time."""
    if not config.hydrograph:
        return 0.0
    times = np.array([t for t, _ in config.hydrograph])
    flows = np.array([q for _, q in config.hydrograph])
    if config.total_discharge is not None:
        if times[-1] > times[0]:
            mean = float(np.trapezoid(flows, times) / (times[-1] - times[0]))
        else:
            mean = float(flows[0])
        return config.total_discharge / mean if mean > 0 else 0.0
    return float(times[-1])


def hydrograph_discharge(config: SimConfig, t: float) -> float:
    """Piecewise-linear Q(t); holds the first value before the first
    breakpoint and is 0 once the hydrograph has ended."""
    if not config.hydrograph:
        return 0.0
    times = [bt for bt, _ in config.hydrograph]
    flows = [q for _, q in config.hydrograph]
    if t > times[-1]:
        return 0.0
    return float(np.interp(t, times, flows))


def initialize(terrain: TerrainGrid, config: SimConfig) -> tuple[FloodState, MassLedger]:
    """Build the t=0 state: dry grid except fixed-depth inlets, zero fluxes.

    Initial inlet water counts as inflow so the ledger identity starts
    balanced. Logs (not raises) a CFL advisory when dt looks too large for
    the expected depths.
    """
    config.validate(terrain)
    state = FloodState(terrain, config.dry_threshold)
    ledger = MassLedger()
    d = state.depth
    for inlet in config.inlet_cells:
        if inlet.mode == "fixed_depth":
            d[inlet.row, inlet.col] = config.inlet_depth
            ledger.volume_in += config.inlet_depth * terrain.cell_area
    ledger.refresh(float(d[state.valid].sum()) * terrain.cell_area)

    d_ref = max(config.inlet_depth, float(d.max()) if d.size else 0.0, 1e-3)
    dt_advisory = terrain.cellsize / math.sqrt(config.gravity * d_ref)
    if config.dt > dt_advisory:
        logger.warning(
            "dt=%.4g s exceeds the CFL advisory %.4g s for depths near %.3g m; "
            "the run may abort as unstable",
            config.dt,
            dt_advisory,
            d_ref,
        )
    return state, ledger


def compute_flux(
    state: FloodState, terrain: TerrainGrid, config: SimConfig, cell: tuple[int, int]
) -> tuple[float, float]:
    """New (M, N) for the two faces owned by one cell — reference entry point.

    Same compiled rule the parallel passes use, exposed per cell for tests
    and diagnostics.
    """
    r, c = cell
    m_new, n_new, ok = _kernels.flux_cell(
        state.depth,
        terrain.elevation,
        terrain.roughness,
        state.flux_x,
        state.flux_y,
        state.valid,
        r,
        c,
        terrain.nrows,
        terrain.ncols,
        config.dt,
        terrain.cellsize,
        terrain.cellsize,
        config.gravity,
        config.dry_threshold,
    )
    if not ok:
        raise InstabilityError(state.step_index, (r, c), None, RunReport(config.scheduling, config.threads, 0))
    return m_new, n_new


def update_depth(
    depth: np.ndarray,
    m_new: np.ndarray,
    n_new: np.ndarray,
    terrain: TerrainGrid,
    config: SimConfig,
    cell: tuple[int, int],
) -> tuple[float, float]:
    """New depth for one cell from updated fluxes: (clamped depth, clamp deficit in m)."""
    r, c = cell
    dn = _kernels.depth_cell(
        depth, m_new, n_new, r, c, terrain.nrows, terrain.ncols, config.dt, terrain.cellsize, terrain.cellsize
    )
    if not math.isfinite(dn):
        raise InstabilityError(0, (r, c), None, RunReport(config.scheduling, config.threads, 0))
    if dn < 0.0:
        return 0.0, -dn
    return dn, 0.0


def _moore_wet_count(wet: np.ndarray) -> np.ndarray:
    """Number of wet cells in each cell's 8-neighbour ring (edges see fewer)."""
    padded = np.zeros((wet.shape[0] + 2, wet.shape[1] + 2), dtype=np.int8)
    padded[1:-1, 1:-1] = wet
    count = np.zeros(wet.shape, dtype=np.int8)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            count += padded[1 + dr : 1 + dr + wet.shape[0], 1 + dc : 1 + dc + wet.shape[1]]
    return count


def apply_wet_dry_rule(state: FloodState, config: SimConfig, cell: tuple[int, int]) -> tuple[float, str]:
    """Neighbour rule for one cell: (new depth, one of 'wetted'/'dried'/'unchanged').

    A dry cell with more than 7 wet Moore neighbours becomes wet at the dry
    threshold; a wet cell with fewer than 2 wet neighbours becomes dry.
    Decisions use the current wet mask only.
    """
    r, c = cell
    if not state.valid[r, c]:
        return state.depth[r, c], "unchanged"
    wet = state.wet_mask
    count = 0
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            rr, cc = r + dr, c + dc
            if 0 <= rr < wet.shape[0] and 0 <= cc < wet.shape[1] and wet[rr, cc]:
                count += 1
    d = state.depth[r, c]
    if not wet[r, c] and count > 7:
        return state.dry_threshold, "wetted"
    if wet[r, c] and count < 2:
        return 0.0, "dried"
    return d, "unchanged"


def _wet_dry_pass(d: np.ndarray, state: FloodState, ledger: MassLedger, cell_area: float) -> None:
    """Vectorized wet/dry rule over the whole grid, charged to the ledger."""
    wet = (d > state.dry_threshold) & state.valid
    count = _moore_wet_count(wet)
    force_wet = state.valid & ~wet & (count > 7)
    force_dry = wet & (count < 2)
    if force_wet.any():
        ledger.wetdry_added += float((state.dry_threshold - d[force_wet]).sum()) * cell_area
        d[force_wet] = state.dry_threshold
    if force_dry.any():
        ledger.wetdry_removed += float(d[force_dry].sum()) * cell_area
        d[force_dry] = 0.0


def inject_inlets(
    state: FloodState, ledger: MassLedger, terrain: TerrainGrid, config: SimConfig, t: float
) -> None:
    """Apply the inlet boundary condition for the step starting at time t.

    Fixed-depth inlets are topped up to inlet_depth (never drawn down);
    hydrograph inlets share Q(t)*dt equally. A total_discharge budget caps
    the cumulative hydrograph volume.
    """
    d = state.depth
    area = terrain.cell_area
    hydro_inlets = [i for i in config.inlet_cells if i.mode == "hydrograph"]
    for inlet in config.inlet_cells:
        if inlet.mode == "fixed_depth":
            deficit = config.inlet_depth - d[inlet.row, inlet.col]
            if deficit > 0.0:
                d[inlet.row, inlet.col] += deficit
                ledger.volume_in += deficit * area
    if hydro_inlets:
        volume = hydrograph_discharge(config, t) * config.dt  # m^3 this step
        if config.total_discharge is not None:
            volume = min(volume, max(config.total_discharge - ledger.volume_in, 0.0))
        if volume > 0.0:
            per_cell = volume / (len(hydro_inlets) * area)
            for inlet in hydro_inlets:
                d[inlet.row, inlet.col] += per_cell
            ledger.volume_in += volume


def _inflow_exhausted(config: SimConfig, ledger: MassLedger, t: float) -> bool:
    if any(i.mode == "fixed_depth" for i in config.inlet_cells):
        return False
    hydro = [i for i in config.inlet_cells if i.mode == "hydrograph"]
    if not hydro:
        return True
    if config.total_discharge is not None and ledger.volume_in >= config.total_discharge:
        return True
    return bool(config.hydrograph) and t > config.hydrograph[-1][0]


class _StepRuntime:
    """Preallocated per-run scratch shared by every step."""

    def __init__(self, state: FloodState, plan: BlockPlan):
        self.plan = plan
        nblocks = len(plan.blocks)
        self.bad = np.full(nblocks, -1, dtype=np.int64)
        self.clamp = np.zeros(nblocks)


def step(
    state: FloodState,
    terrain: TerrainGrid,
    config: SimConfig,
    executor: PassExecutor,
    ledger: MassLedger,
    runtime: _StepRuntime | None = None,
) -> None:
    """Advance the state by one dt in place (buffers swap at the end)."""
    if runtime is None:
        runtime = _StepRuntime(state, executor.plan)
    inject_inlets(state, ledger, terrain, config, state.time)

    d_old, m_old, n_old = state.depth, state.flux_x, state.flux_y
    d_new, m_new, n_new = state.next_buffers()
    rows, cols = state.cell_rows, state.cell_cols
    nrows, ncols = terrain.nrows, terrain.ncols
    dt, dx, dy = config.dt, terrain.cellsize, terrain.cellsize
    block_size = executor.plan.block_size

    runtime.bad.fill(-1)

    def flux_pass(start: int, stop: int) -> None:
        _kernels.flux_block(
            start, stop, rows, cols,
            d_old, terrain.elevation, terrain.roughness, m_old, n_old, m_new, n_new,
            state.valid, nrows, ncols, dt, dx, dy, config.gravity, config.dry_threshold,
            runtime.bad, start // block_size,
        )

    executor.run_pass(flux_pass)
    _check_stable(runtime.bad, state, ncols)

    runtime.clamp.fill(0.0)

    def depth_pass(start: int, stop: int) -> None:
        _kernels.depth_block(
            start, stop, rows, cols,
            d_old, m_new, n_new, d_new,
            nrows, ncols, dt, dx, dy,
            runtime.clamp, runtime.bad, start // block_size,
        )

    executor.run_pass(depth_pass)
    _check_stable(runtime.bad, state, ncols)

    clamp_m = float(runtime.clamp.sum())
    if clamp_m > 0.0:
        ledger.clamp_volume += clamp_m * terrain.cell_area
        ledger.clamp_events += 1

    if config.wet_rule_on:
        _wet_dry_pass(d_new, state, ledger, terrain.cell_area)

    state.swap()
    ledger.refresh(float(state.depth[state.valid].sum()) * terrain.cell_area)
    state.time += config.dt
    state.step_index += 1


def _check_stable(bad: np.ndarray, state: FloodState, ncols: int) -> None:
    hits = bad[bad >= 0]
    if hits.size:
        flat = int(hits.min())
        raise _RawInstability((flat // ncols, flat % ncols))


class _RawInstability(Exception):
    def __init__(self, cell: tuple[int, int]):
        self.cell = cell


def run(
    terrain: TerrainGrid,
    config: SimConfig,
    on_frame: Callable[[int, FloodFrame], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
    on_progress: Callable[[float], None] | None = None,
    run_id: str | None = None,
) -> RunReport:
    """Run a full simulation; emit a frame at t=0, every snapshot_interval,
    and at the end. Returns the RunReport; raises InstabilityError (with the
    last stable frame attached) if the step aborts.

    The report's wall_parallel covers the step loop only — frame building,
    serialization and callbacks are excluded, so timings are comparable
    across scheduling policies.
    """
    state, ledger = initialize(terrain, config)
    if run_id is None:
        # deterministic, and independent of the scheduling knobs: identical
        # scenarios must produce byte-identical frames on any executor
        scenario = {
            k: v
            for k, v in config.to_dict().items()
            if k not in ("scheduling", "threads", "block_size")
        }
        seed = json.dumps(scenario, sort_keys=True) + repr(
            (terrain.ncols, terrain.nrows, terrain.xllcorner, terrain.yllcorner, terrain.cellsize)
        )
        run_id = hashlib.sha1(seed.encode()).hexdigest()[:12]

    nsteps = math.ceil(config.duration / config.dt - 1e-9)
    snap_every = round(config.snapshot_interval / config.dt)

    block_size = config.block_size
    if block_size is None:
        block_size = _pick_block_size(state, terrain, config)
    plan = partition(state.ncells, block_size)
    report = RunReport(policy=config.scheduling, threads=config.threads, block_size=block_size)
    report.peak_flow = peak_flow(config)
    report.drainage_time = drainage_time(config)

    last_frame: FloodFrame | None = None

    def emit(step_index: int) -> None:
        nonlocal last_frame
        frame = build_frame(
            state,
            terrain,
            wet_threshold=config.dry_threshold,
            information={
                "time": repr(state.time),
                "step": str(step_index),
                "crs": terrain.crs_label,
                "run_id": run_id,
            },
        )
        last_frame = frame
        report.frames_emitted += 1
        if on_frame is not None:
            on_frame(step_index, frame)

    emit(0)
    drained_at: int | None = None
    with PassExecutor(plan, config.scheduling, config.threads) as executor:
        runtime = _StepRuntime(state, plan)
        for k in range(1, nsteps + 1):
            if should_stop is not None and should_stop():
                report.cancelled = True
                break
            t0 = time.perf_counter()
            try:
                step(state, terrain, config, executor, ledger, runtime)
            except _RawInstability as exc:
                report.aborted = True
                report.abort_step = k
                report.abort_cell = exc.cell
                report.per_thread_blocks = list(executor.per_thread_blocks)
                _finalize(report, state, ledger)
                raise InstabilityError(k, exc.cell, last_frame, report) from None
            report.per_step_timings.append(time.perf_counter() - t0)
            report.steps_completed = k
            if k % snap_every == 0 or k == nsteps:
                emit(k)
            if on_progress is not None:
                on_progress(min(state.time / config.duration, 1.0))
            if (
                ledger.volume_in > 0.0
                and _inflow_exhausted(config, ledger, state.time)
                and ledger.volume_stored < config.dry_threshold * terrain.cell_area
            ):
                drained_at = k
                break
        report.per_thread_blocks = list(executor.per_thread_blocks)

    if drained_at is not None and drained_at % snap_every != 0 and drained_at != nsteps:
        emit(drained_at)
    if drained_at is not None:
        report.notes["drained_at_step"] = drained_at
    report.wall_parallel = sum(report.per_step_timings)
    _finalize(report, state, ledger)
    return report


def _finalize(report: RunReport, state: FloodState, ledger: MassLedger) -> None:
    report.mass_balance_error = ledger.relative_error()
    report.ledger = asdict(ledger)
    report.notes["final_depth"] = state.depth.copy()
    report.notes["final_time"] = state.time


def _pick_block_size(state: FloodState, terrain: TerrainGrid, config: SimConfig) -> int:
    """Block size for this run: warm-up auto-tune for parallel runs, whole
    grid for serial ones (a serial pass gains nothing from small blocks)."""
    if config.scheduling == "serial" or config.threads == 1:
        return max(state.ncells, 1)

    def step_once(block_size: int) -> float:
        trial_state, trial_ledger = initialize(terrain, config)
        plan = partition(trial_state.ncells, block_size)
        with PassExecutor(plan, config.scheduling, config.threads) as ex:
            runtime = _StepRuntime(trial_state, plan)
            t0 = time.perf_counter()
            step(trial_state, terrain, config, ex, trial_ledger, runtime)
            return time.perf_counter() - t0

    chosen = autotune_block_size(step_once, state.ncells)
    logger.info("auto-tuned block_size=%d for %d cells", chosen, state.ncells)
    return chosen
