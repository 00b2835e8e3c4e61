/**
 * End-to-end against a live engine server: list datasets, validate and
 * submit a run through the form model, stream its frames and play them
 * into the scene. Uses the NDJSON mirror of the frame stream (same bytes
 * as the WebSocket transport, consumable from Node).
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { ApiClient, StreamHeader, StreamTerminal } from "../src/api.js";
import { FloodFrame } from "../src/frames.js";
import { buildConfig, defaultForm, validateForm } from "../src/form.js";
import { buildWaterGeometry, emptyScene, ingestFrame, probe, SceneModel } from "../src/scene.js";

const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const here = path.dirname(fileURLToPath(import.meta.url));
const datasetDir = path.resolve(here, "../../fixtures/server");

let server: ChildProcess;

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const t0 = Date.now();
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/datasets`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    if (Date.now() - t0 > timeoutMs) throw new Error("server never came up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  const code = [
    "import tempfile",
    "from floodca.server import ServerConfig, serve",
    `serve(ServerConfig(dataset_dir=${JSON.stringify(datasetDir)}, spool_dir=tempfile.mkdtemp(), port=${PORT}))`,
  ].join("\n");
  server = spawn("python3", ["-c", code], { stdio: ["ignore", "pipe", "pipe"] });
  await waitForServer();
}, 90_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("live server round trip", () => {
  it("submits a configured run and plays streamed frames", async () => {
    const api = new ApiClient(BASE);
    const datasets = await api.listDatasets();
    expect(datasets.map((d) => d.id)).toContain("valley");
    const header = datasets.find((d) => d.id === "valley")!;

    const form = defaultForm();
    form.duration = 30;
    form.snapshotInterval = 10;
    form.crestTime = 15;
    form.inlets = [
      { row: 0, col: 24 },
      { row: 0, col: 25 },
    ];
    expect(validateForm(form, header)).toEqual([]);

    const jobId = await api.submitJob(header.id, buildConfig(form));
    expect(jobId).toBeTruthy();

    let model: SceneModel = { ...emptyScene(), dataset: header };
    let streamHeader: StreamHeader | null = null;
    let terminal: StreamTerminal | null = null;
    const playedVertexCounts: number[] = [];

    await api.streamFramesNdjson(jobId, {
      onHeader(h) {
        streamHeader = h;
        model = { ...model, palette: h.palette };
      },
      onFrame(frame: FloodFrame) {
        model = ingestFrame(model, frame);
        // playing at the live edge: the water mesh is rebuilt per frame
        const current = model.frames[model.playback.current];
        const geo = buildWaterGeometry(current, model.palette);
        expect(geo.vertexCount).toBe(current.vertex.length / 3);
        playedVertexCounts.push(geo.vertexCount);
      },
      onEnd(t) {
        terminal = t;
      },
    });

    expect(streamHeader).not.toBeNull();
    expect(streamHeader!.palette.length).toBe(256);
    expect(terminal).not.toBeNull();
    expect(terminal!.status).toBe("finished");
    expect(model.frames.length).toBe(streamHeader!.total_expected_frames);
    expect(model.frames.length).toBeGreaterThanOrEqual(2);
    expect(playedVertexCounts.length).toBeGreaterThanOrEqual(2);
    expect(playedVertexCounts[playedVertexCounts.length - 1]).toBeGreaterThan(0);

    // probe an inlet-adjacent cell on the last frame: readout equals the
    // streamed depth exactly
    const last = model.frames[model.frames.length - 1];
    const k = last.depthValues.findIndex((d) => d > 0);
    expect(k).toBeGreaterThanOrEqual(0);
    const col = Math.floor(last.vertex[3 * k] / last.cellsize);
    const row = header.nrows - 1 - Math.floor(last.vertex[3 * k + 1] / last.cellsize);
    expect(probe(model, row, col).depth).toBe(last.depthValues[k]);

    const done = await api.getJob(jobId);
    expect(done.status).toBe("finished");
    expect(done.progress).toBe(1.0);
  }, 120_000);

  it("rejects a server-side-invalid config with field errors", async () => {
    const api = new ApiClient(BASE);
    const form = defaultForm();
    form.inlets = [{ row: 0, col: 24 }];
    const config = buildConfig(form);
    (config.inlet_cells as unknown[]) = [[999, 999, "hydrograph"]];
    await expect(api.submitJob("valley", config)).rejects.toThrow(/inlet_cells\[0\]/);
  }, 30_000);
});
