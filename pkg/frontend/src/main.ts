/**
 * Browser entry: parameter console on the left, 3D flood scene on the right.
 *
 * Flow: pick a dataset, click inlet cells on the terrain, adjust the
 * hydrograph numbers, submit. Frames stream in over the job WebSocket and
 * the water surface follows the live edge; the transport controls scrub
 * through time afterwards. Hovering the terrain reads out the water depth
 * at that cell for the current frame.
 */

import * as THREE from "three";

import { ApiClient, StreamHeader, StreamTerminal } from "./api.js";
import { FloodFrame } from "./frames.js";
import { DatasetHeader, defaultForm, validateForm, buildConfig, RunForm } from "./form.js";
import { pause, play, scrub, setSpeed, tick } from "./playback.js";
import {
  SceneModel,
  buildTerrainGeometry,
  buildWaterGeometry,
  cellAt,
  currentFrame,
  emptyScene,
  ingestFrame,
  probe,
} from "./scene.js";

const api = new ApiClient(window.location.origin);

let model: SceneModel = emptyScene();
let form: RunForm = defaultForm();
let activeJob: string | null = null;
let stopStream: (() => void) | null = null;

// --- three.js scaffolding --------------------------------------------------

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const scene = new THREE.Scene();
scene.background = new THREE.Color(0x10141a);
const camera = new THREE.PerspectiveCamera(55, 1, 0.1, 1e6);
const worldGroup = new THREE.Group();
scene.add(worldGroup);
scene.add(new THREE.AmbientLight(0xffffff, 0.75));
const sun = new THREE.DirectionalLight(0xffffff, 1.2);
sun.position.set(1, 2, 1);
scene.add(sun);

let terrainMesh: THREE.Mesh | null = null;
let waterMesh: THREE.Mesh | null = null;
let inletMarkers: THREE.Group = new THREE.Group();
worldGroup.add(inletMarkers);
let renderedFrameIndex = -1;

function resize() {
  const { clientWidth, clientHeight } = canvas.parentElement as HTMLElement;
  renderer.setSize(clientWidth, clientHeight, false);
  camera.aspect = clientWidth / clientHeight;
  camera.updateProjectionMatrix();
}
window.addEventListener("resize", resize);

// simple orbit: drag rotates, wheel zooms
let orbit = { theta: -Math.PI / 4, phi: Math.PI / 4, radius: 1000, target: new THREE.Vector3() };
function applyCamera() {
  const { theta, phi, radius, target } = orbit;
  camera.position.set(
    target.x + radius * Math.sin(phi) * Math.cos(theta),
    target.y + radius * Math.cos(phi),
    target.z + radius * Math.sin(phi) * Math.sin(theta),
  );
  camera.lookAt(target);
}
let dragging = false;
let lastPointer = [0, 0];
canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  lastPointer = [e.clientX, e.clientY];
});
window.addEventListener("pointerup", () => (dragging = false));
canvas.addEventListener("pointermove", (e) => {
  if (dragging) {
    orbit.theta += (e.clientX - lastPointer[0]) * 0.005;
    orbit.phi = Math.min(Math.max(orbit.phi + (e.clientY - lastPointer[1]) * 0.005, 0.05), Math.PI / 2 - 0.02);
    lastPointer = [e.clientX, e.clientY];
    applyCamera();
  }
  updateProbe(e);
});
canvas.addEventListener("wheel", (e) => {
  orbit.radius *= e.deltaY > 0 ? 1.1 : 0.9;
  applyCamera();
});

const raycaster = new THREE.Raycaster();

function pickCell(e: MouseEvent): { row: number; col: number } | null {
  if (!terrainMesh || !model.dataset) return null;
  const rect = canvas.getBoundingClientRect();
  const ndc = new THREE.Vector2(
    ((e.clientX - rect.left) / rect.width) * 2 - 1,
    -((e.clientY - rect.top) / rect.height) * 2 + 1,
  );
  raycaster.setFromCamera(ndc, camera);
  const hits = raycaster.intersectObject(terrainMesh);
  if (!hits.length) return null;
  return cellAt(model.dataset, hits[0].point.x, hits[0].point.z);
}

canvas.addEventListener("click", (e) => {
  const cell = pickCell(e);
  if (!cell || !model.dataset) return;
  const i = form.inlets.findIndex((p) => p.row === cell.row && p.col === cell.col);
  if (i >= 0) form.inlets.splice(i, 1);
  else form.inlets.push(cell);
  renderInletMarkers();
  renderFormState();
});

function updateProbe(e: MouseEvent) {
  const el = document.getElementById("probe")!;
  const cell = pickCell(e);
  if (!cell) {
    el.textContent = "";
    return;
  }
  const reading = probe(model, cell.row, cell.col);
  el.textContent = `cell (${cell.row}, ${cell.col}): ${reading.label}`;
}

// --- scene updates ----------------------------------------------------------

function showTerrain() {
  if (!model.dem) return;
  const geo = buildTerrainGeometry(model.dem);
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(geo.positions, 3));
  geometry.setAttribute("color", new THREE.BufferAttribute(geo.colors, 3));
  geometry.setIndex(new THREE.BufferAttribute(geo.indices, 1));
  geometry.computeVertexNormals();
  const material = new THREE.MeshLambertMaterial({ vertexColors: true });
  if (terrainMesh) worldGroup.remove(terrainMesh);
  terrainMesh = new THREE.Mesh(geometry, material);
  worldGroup.add(terrainMesh);

  const header = model.dem.header;
  const w = header.ncols * header.cellsize;
  const h = header.nrows * header.cellsize;
  orbit.target.set(w / 2, 0, -h / 2);
  orbit.radius = Math.max(w, h) * 1.2;
  applyCamera();
}

function showFrame(index: number) {
  const frame = model.frames[index];
  if (!frame) return;
  if (waterMesh) {
    worldGroup.remove(waterMesh);
    waterMesh.geometry.dispose();
    waterMesh = null;
  }
  if (frame.vertex.length === 0) {
    renderedFrameIndex = index;
    updateTransportUi();
    return; // dry scene: water layer hidden for this timestep
  }
  const geo = buildWaterGeometry(frame, model.palette);
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(geo.positions, 3));
  geometry.setAttribute("color", new THREE.BufferAttribute(geo.colors, 3));
  geometry.setIndex(new THREE.BufferAttribute(geo.indices, 1));
  geometry.computeVertexNormals();
  const material = new THREE.MeshLambertMaterial({
    vertexColors: true,
    transparent: true,
    opacity: 0.88,
    side: THREE.DoubleSide,
  });
  waterMesh = new THREE.Mesh(geometry, material);
  waterMesh.position.y = 0.02; // avoid z-fighting against the bed
  worldGroup.add(waterMesh);
  renderedFrameIndex = index;
  updateTransportUi();
}

function renderInletMarkers() {
  worldGroup.remove(inletMarkers);
  inletMarkers = new THREE.Group();
  if (model.dataset && model.dem) {
    const cs = model.dataset.cellsize;
    for (const pick of form.inlets) {
      const marker = new THREE.Mesh(
        new THREE.ConeGeometry(cs * 0.6, cs * 2, 8),
        new THREE.MeshLambertMaterial({ color: 0xff5533 }),
      );
      const x = (pick.col + 0.5) * cs;
      const z = -(model.dataset.nrows - 1 - pick.row + 0.5) * cs;
      const h = model.dem.elevation[Math.floor(pick.row / model.dem.stride)]?.[Math.floor(pick.col / model.dem.stride)] ?? 0;
      marker.position.set(x, h + cs, z);
      inletMarkers.add(marker);
    }
  }
  worldGroup.add(inletMarkers);
}

// --- DOM wiring ---------------------------------------------------------

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function renderFormState() {
  el("inlet-count").textContent = `${form.inlets.length} inlet cell(s) picked`;
}

function renderErrors(errors: { field: string; message: string }[]) {
  const box = el("errors");
  box.innerHTML = "";
  for (const err of errors) {
    const li = document.createElement("li");
    li.textContent = `${err.field}: ${err.message}`;
    box.appendChild(li);
  }
}

function updateJobUi(status: string, detail = "") {
  el("job-status").textContent = activeJob ? `job ${activeJob}: ${status} ${detail}`.trim() : "";
}

function updateTransportUi() {
  const slider = el<HTMLInputElement>("scrub");
  slider.max = String(Math.max(model.frames.length - 1, 0));
  if (document.activeElement !== slider) slider.value = String(model.playback.current);
  const frame = currentFrame(model);
  el("frame-label").textContent = frame
    ? `frame ${model.playback.current + 1}/${model.frames.length} (t=${frame.information.time ?? "?"} s)`
    : "no frames yet";
}

async function loadDatasets() {
  const datasets = await api.listDatasets();
  const select = el<HTMLSelectElement>("dataset");
  select.innerHTML = "";
  for (const ds of datasets) {
    const opt = document.createElement("option");
    opt.value = ds.id;
    opt.textContent = `${ds.id} (${ds.nrows}x${ds.ncols} @ ${ds.cellsize} m)`;
    select.appendChild(opt);
  }
  if (datasets.length) await selectDataset(datasets[0].id);
  select.onchange = () => selectDataset(select.value);
}

async function selectDataset(id: string) {
  const dem = await api.getDem(id, 1);
  model = { ...emptyScene(), dataset: dem as DatasetHeader & typeof dem, dem: { header: dem, stride: dem.stride, elevation: dem.elevation } };
  form = defaultForm();
  renderFormState();
  showTerrain();
  renderInletMarkers();
  updateTransportUi();
}

function readFormInputs(): RunForm {
  return {
    ...form,
    dt: Number(el<HTMLInputElement>("dt").value),
    duration: Number(el<HTMLInputElement>("duration").value),
    snapshotInterval: Number(el<HTMLInputElement>("interval").value),
    peakDischarge: Number(el<HTMLInputElement>("peak").value),
    baseDischarge: Number(el<HTMLInputElement>("base").value),
    crestTime: Number(el<HTMLInputElement>("crest").value),
    wetRule: el<HTMLInputElement>("wetrule").checked,
  };
}

async function submit() {
  const dataset = model.dataset;
  if (!dataset) return;
  form = readFormInputs();
  const errors = validateForm(form, dataset);
  renderErrors(errors);
  if (errors.length) return;

  if (stopStream) stopStream();
  model = { ...model, frames: [], probes: [], playback: { ...model.playback, current: 0, frameCount: 0, followLive: true } };
  try {
    activeJob = await api.submitJob(dataset.id, buildConfig(form));
  } catch (err) {
    if (err instanceof (await import("./api.js")).FieldErrorsError) {
      renderErrors(err.errors);
    } else {
      renderErrors([{ field: "submit", message: String(err) }]);
    }
    return;
  }
  updateJobUi("queued");
  stopStream = api.streamFrames(activeJob, {
    onHeader(header: StreamHeader) {
      model = { ...model, palette: header.palette };
      updateJobUi("running", `expecting ${header.total_expected_frames} frames`);
    },
    onFrame(frame: FloodFrame) {
      model = ingestFrame(model, frame);
      updateTransportUi();
    },
    onEnd(terminal: StreamTerminal) {
      updateJobUi(terminal.status, terminal.error_detail ?? "");
    },
  });
}

el<HTMLButtonElement>("submit").onclick = () => void submit();
el<HTMLButtonElement>("cancel").onclick = () => {
  if (activeJob) void api.cancelJob(activeJob);
};
el<HTMLButtonElement>("play").onclick = () => (model = { ...model, playback: play(model.playback) });
el<HTMLButtonElement>("pause-btn").onclick = () => (model = { ...model, playback: pause(model.playback) });
el<HTMLInputElement>("scrub").oninput = (e) => {
  const v = Number((e.target as HTMLInputElement).value);
  model = { ...model, playback: scrub(pause(model.playback), v) };
};
el<HTMLInputElement>("speed").onchange = (e) => {
  model = { ...model, playback: setSpeed(model.playback, Number((e.target as HTMLInputElement).value)) };
};

// playback clock: 4 transport ticks per second
setInterval(() => {
  model = { ...model, playback: tick(model.playback) };
}, 250);

function animate() {
  requestAnimationFrame(animate);
  if (model.playback.current !== renderedFrameIndex) showFrame(model.playback.current);
  renderer.render(scene, camera);
}

resize();
applyCamera();
void loadDatasets();
animate();
