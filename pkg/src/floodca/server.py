"""Browser/server half of the pipeline: submit a run, stream its frames.

Control is plain HTTP + JSON (POST /jobs, GET /jobs/{id}, DELETE /jobs/{id},
GET /datasets); each job's frames go out over a persistent stream —
a WebSocket at /jobs/{id}/frames (one header message, then one message per
frame, then a terminal message) with an NDJSON mirror at
/jobs/{id}/frames.ndjson. Frame messages are exactly the serialized
FloodFrame bytes, so every subscriber of a job sees the same byte sequence
in the same order; late subscribers replay the on-disk frame buffer first.

Datasets are registered on disk: drop .asc files plus a ``datasets.json``
manifest into the dataset directory. Jobs are in-memory (a restart loses
only in-flight jobs), run one at a time by default, FIFO.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field, asdict
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import StreamingResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import engine
from .frames import default_palette, serialize_frame
from .rasters import TerrainGrid, read_ascii_grid, terrain_from_layers

logger = logging.getLogger(__name__)

JOB_STATES = ("queued", "running", "finished", "failed", "cancelled")


@dataclass
class ServerConfig:
    dataset_dir: str
    spool_dir: str = ""
    host: str = "127.0.0.1"
    port: int = 8000
    max_jobs: int = 1  # concurrently running simulations
    viewer_dir: str = ""  # static viewer bundle mounted at / when set

    def __post_init__(self):
        if not self.spool_dir:
            self.spool_dir = str(Path(self.dataset_dir) / "_spool")

    @staticmethod
    def from_file(path: str) -> "ServerConfig":
        with open(path, "r", encoding="utf-8") as f:
            return ServerConfig(**json.load(f))


class DatasetRegistry:
    """On-disk datasets: DEM (+ roughness) rasters named by a JSON manifest."""

    def __init__(self, dataset_dir: str):
        self.dataset_dir = Path(dataset_dir)
        self._cache: dict[str, TerrainGrid] = {}
        self._lock = threading.Lock()

    def _manifest(self) -> dict:
        path = self.dataset_dir / "datasets.json"
        if not path.exists():
            return {}
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def ids(self) -> list[str]:
        return sorted(self._manifest())

    def describe(self) -> list[dict]:
        out = []
        for ds_id in self.ids():
            terrain = self.load(ds_id)
            out.append({"id": ds_id, **_terrain_header(terrain)})
        return out

    def load(self, ds_id: str) -> TerrainGrid:
        with self._lock:
            if ds_id in self._cache:
                return self._cache[ds_id]
        manifest = self._manifest()
        if ds_id not in manifest:
            raise KeyError(ds_id)
        entry = manifest[ds_id]
        dem = read_ascii_grid(str(self.dataset_dir / entry["dem"]))
        if "roughness" in entry:
            rough = read_ascii_grid(str(self.dataset_dir / entry["roughness"]))
            terrain = terrain_from_layers(dem, roughness=rough, crs_label=entry.get("crs_label", ""))
        else:
            terrain = terrain_from_layers(
                dem,
                roughness_const=float(entry.get("roughness_const", 0.05)),
                crs_label=entry.get("crs_label", ""),
            )
        with self._lock:
            self._cache[ds_id] = terrain
        return terrain


def _terrain_header(t: TerrainGrid) -> dict:
    return {
        "ncols": t.ncols,
        "nrows": t.nrows,
        "xllcorner": t.xllcorner,
        "yllcorner": t.yllcorner,
        "cellsize": t.cellsize,
        "nodata_value": t.nodata_value,
        "crs_label": t.crs_label,
    }


class FrameLog:
    """Append-only on-disk frame buffer with blocking reads.

    One writer (the job worker), any number of readers; readers see the
    exact append order. The terminal message closes the log.
    """

    def __init__(self, directory: Path):
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self._count = 0
        self._terminal: dict | None = None
        self._cond = threading.Condition()

    def append(self, payload: bytes) -> None:
        path = self.directory / f"frame_{self._count:06d}.json"
        path.write_bytes(payload)
        with self._cond:
            self._count += 1
            self._cond.notify_all()

    def finish(self, terminal: dict) -> None:
        with self._cond:
            self._terminal = terminal
            self._cond.notify_all()

    def wait_next(self, i: int, timeout: float = 1.0):
        """(frame bytes, None) | (None, terminal) | (None, None) on timeout."""
        with self._cond:
            if i < self._count:
                pass
            elif self._terminal is not None:
                return None, self._terminal
            else:
                self._cond.wait(timeout)
                if i >= self._count:
                    return (None, self._terminal) if self._terminal is not None else (None, None)
        return (self.directory / f"frame_{i:06d}.json").read_bytes(), None

    @property
    def count(self) -> int:
        return self._count


@dataclass
class Job:
    job_id: str
    terrain_ref: str
    config: engine.SimConfig
    status: str = "queued"
    progress: float = 0.0
    error_detail: str | None = None
    created_at: float = field(default_factory=time.time)
    log: FrameLog | None = None
    header: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def descriptor(self) -> dict:
        return {
            "job_id": self.job_id,
            "terrain_ref": self.terrain_ref,
            "status": self.status,
            "progress": self.progress,
            "frames_emitted": self.log.count if self.log else 0,
            "error_detail": self.error_detail,
        }


class JobManager:
    """FIFO job queue with a fixed pool of simulation workers (default 1)."""

    def __init__(self, registry: DatasetRegistry, spool_dir: str, max_jobs: int = 1):
        self.registry = registry
        self.spool_dir = Path(spool_dir)
        self.jobs: dict[str, Job] = {}
        self._queue: queue.Queue[str] = queue.Queue()
        self._lock = threading.Lock()
        self._workers = [
            threading.Thread(target=self._worker_loop, name=f"floodca-job-{i}", daemon=True)
            for i in range(max(max_jobs, 1))
        ]
        for w in self._workers:
            w.start()

    def submit(self, terrain_ref: str, config_doc: dict) -> Job:
        try:
            terrain = self.registry.load(terrain_ref)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown terrain_ref {terrain_ref!r}")
        try:
            config = engine.SimConfig.from_dict(config_doc)
            config.validate(terrain)
        except engine.ConfigValidationError as exc:
            raise HTTPException(
                status_code=422,
                detail={"errors": [{"field": f, "message": m} for f, m in exc.errors]},
            )
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail={"errors": [{"field": "config", "message": str(exc)}]})

        job = Job(job_id=uuid.uuid4().hex[:12], terrain_ref=terrain_ref, config=config)
        job.log = FrameLog(self.spool_dir / job.job_id)
        job.header = {
            "type": "header",
            "job_id": job.job_id,
            "terrain": _terrain_header(terrain),
            "palette": default_palette(),
            "total_expected_frames": expected_frame_count(config),
        }
        with self._lock:
            self.jobs[job.job_id] = job
        self._queue.put(job.job_id)
        return job

    def get(self, job_id: str) -> Job:
        with self._lock:
            if job_id not in self.jobs:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
            return self.jobs[job_id]

    def cancel(self, job_id: str) -> Job:
        job = self.get(job_id)
        job.cancel_event.set()
        with self._lock:
            if job.status == "queued":
                job.status = "cancelled"
                job.log.finish({"type": "end", "status": "cancelled", "report": {}})
        return job

    def _worker_loop(self) -> None:
        while True:
            job_id = self._queue.get()
            job = self.jobs.get(job_id)
            if job is None:
                continue
            with self._lock:
                if job.status != "queued":
                    continue  # cancelled while waiting
                job.status = "running"
            self._run_job(job)

    def _run_job(self, job: Job) -> None:
        terrain = self.registry.load(job.terrain_ref)

        def on_frame(step_index: int, frame) -> None:
            job.log.append(serialize_frame(frame))

        def on_progress(p: float) -> None:
            job.progress = max(job.progress, p)

        try:
            report = engine.run(
                terrain,
                job.config,
                on_frame=on_frame,
                should_stop=job.cancel_event.is_set,
                on_progress=on_progress,
            )
            job.report = _report_summary(report)
            if report.cancelled:
                job.status = "cancelled"
            else:
                job.status = "finished"
                job.progress = 1.0
            job.log.finish({"type": "end", "status": job.status, "report": job.report})
        except engine.InstabilityError as exc:
            job.status = "failed"
            job.error_detail = f"unstable at step {exc.step_index}, cell {list(exc.cell)}"
            job.report = _report_summary(exc.report)
            job.report["abort_step"] = exc.step_index
            job.log.finish(
                {
                    "type": "end",
                    "status": "failed",
                    "error_detail": job.error_detail,
                    "abort_step": exc.step_index,
                    "report": job.report,
                }
            )
        except Exception as exc:  # noqa: BLE001 - job must always terminate its stream
            logger.exception("job %s crashed", job.job_id)
            job.status = "failed"
            job.error_detail = str(exc)
            job.log.finish({"type": "end", "status": "failed", "error_detail": str(exc), "report": {}})


def _report_summary(report) -> dict:
    return {
        "steps_completed": report.steps_completed,
        "frames_emitted": report.frames_emitted,
        "wall_seconds": report.wall_parallel,
        "mass_balance_error": report.mass_balance_error,
        "peak_flow": report.peak_flow,
        "drainage_time": report.drainage_time,
        "ledger": report.ledger,
    }


def expected_frame_count(config: engine.SimConfig) -> int:
    import math

    nsteps = math.ceil(config.duration / config.dt - 1e-9)
    snap_every = round(config.snapshot_interval / config.dt)
    extra = 0 if nsteps % snap_every == 0 else 1
    return 1 + nsteps // snap_every + extra


def create_app(config: ServerConfig) -> FastAPI:
    app = FastAPI(title="floodca", version="0.1.0")
    registry = DatasetRegistry(config.dataset_dir)
    manager = JobManager(registry, config.spool_dir, config.max_jobs)
    app.state.manager = manager
    app.state.registry = registry

    @app.get("/datasets")
    def list_datasets():
        return registry.describe()

    @app.get("/datasets/{ds_id}/dem")
    def get_dem(ds_id: str, stride: int = 1):
        try:
            terrain = registry.load(ds_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown dataset {ds_id!r}")
        stride = max(1, stride)
        elev = terrain.elevation[::stride, ::stride]
        return {
            **_terrain_header(terrain),
            "stride": stride,
            "nrows_strided": elev.shape[0],
            "ncols_strided": elev.shape[1],
            "elevation": elev.tolist(),
        }

    @app.post("/jobs", status_code=202)
    def submit_job(body: dict):
        terrain_ref = body.get("terrain_ref")
        if not terrain_ref:
            raise HTTPException(status_code=422, detail={"errors": [{"field": "terrain_ref", "message": "required"}]})
        job = manager.submit(terrain_ref, body.get("config", {}))
        return {"job_id": job.job_id, "status": job.status}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        return manager.get(job_id).descriptor()

    @app.delete("/jobs/{job_id}")
    def cancel_job(job_id: str):
        return manager.cancel(job_id).descriptor()

    @app.websocket("/jobs/{job_id}/frames")
    async def stream_frames(ws: WebSocket, job_id: str):
        try:
            job = manager.get(job_id)
        except HTTPException:
            await ws.close(code=4404)
            return
        await ws.accept()
        try:
            await ws.send_text(json.dumps(job.header))
            i = 0
            while True:
                payload, terminal = await asyncio.to_thread(job.log.wait_next, i, 1.0)
                if payload is not None:
                    await ws.send_text(payload.decode("ascii"))
                    i += 1
                elif terminal is not None:
                    await ws.send_text(json.dumps(terminal))
                    break
            await ws.close()
        except WebSocketDisconnect:
            pass  # dropped subscribers never affect the job

    @app.get("/jobs/{job_id}/frames.ndjson")
    def stream_frames_ndjson(job_id: str):
        job = manager.get(job_id)

        def generate():
            yield json.dumps(job.header) + "\n"
            i = 0
            while True:
                payload, terminal = job.log.wait_next(i, 1.0)
                if payload is not None:
                    yield payload.decode("ascii") + "\n"
                    i += 1
                elif terminal is not None:
                    yield json.dumps(terminal) + "\n"
                    return

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.exception_handler(HTTPException)
    async def http_error(request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {"message": exc.detail}
        return JSONResponse(status_code=exc.status_code, content=detail)

    viewer = Path(config.viewer_dir) if config.viewer_dir else None
    if viewer and viewer.is_dir():
        app.mount("/", StaticFiles(directory=str(viewer), html=True), name="viewer")

    return app


def serve(config: ServerConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
