// Static demo: everything renders in the page through the wasm module built
// from crates/web (see README for the build command).
import init, { render_preview, phase_curve, density_slice, bounds_json, presets_json } from "./pkg/nimbus_web.js";

// Slider set: [config path, label, step]
const SLIDERS = [
  ["cloud_params.P4", "coverage P4", 0.01],
  ["cloud_params.P3", "P3", 0.01],
  ["cloud_params.C_type", "C_type", 0.01],
  ["cloud_params.C_wispy", "C_wispy", 0.01],
  ["cloud_params.C_billowy", "C_billowy", 0.01],
  ["cloud_params.erosion_strength", "erosion", 0.01],
  ["cloud_params.sigma_max", "σ max", 0.5],
  ["sun.elevation_deg", "sun elev.", 1],
  ["sun.azimuth_deg", "sun azim.", 1],
  ["time_s", "time s", 10],
  ["exposure", "exposure", 0.05],
];
const SLIDER_MAX = { "cloud_params.sigma_max": 60, "time_s": 3600, "exposure": 4, "sun.azimuth_deg": 360, "sun.elevation_deg": 90 };
const SLIDER_MIN = { "sun.elevation_deg": 0, "sun.azimuth_deg": 0, "time_s": 0 };

let scene = {};
let phase = { tthg: { g1: 0.85, g2: -0.3, w: 0.7 } };
const status = document.getElementById("status");

function get(obj, path) {
  return path.split(".").reduce((o, k) => (o == null ? undefined : o[k]), obj);
}

function set(obj, path, value) {
  const keys = path.split(".");
  let o = obj;
  for (const k of keys.slice(0, -1)) o = o[k] ??= {};
  o[keys.at(-1)] = value;
}

function overrides() {
  return JSON.stringify({ ...scene, phase_model: phase });
}

function blit(canvas, rgba, w, h) {
  canvas.width = w;
  canvas.height = h;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
}

function showError(e) {
  let msg = String(e);
  try {
    const body = JSON.parse(msg);
    msg = body.path ? `${body.path}: ${body.message}` : body.message;
  } catch (_) {}
  document.getElementById("error").textContent = msg;
}

function drawPreview() {
  const [w, h] = document.getElementById("size").value.split("x").map(Number);
  const t0 = performance.now();
  try {
    blit(document.getElementById("preview"), render_preview(overrides(), w, h), w, h);
    status.textContent = `${w}×${h} in ${(performance.now() - t0).toFixed(0)} ms`;
    document.getElementById("error").textContent = "";
  } catch (e) {
    showError(e);
  }
}

function drawSlice() {
  const h = Number(document.getElementById("slice-h").value);
  try {
    blit(document.getElementById("slice"), density_slice(overrides(), h, 128), 128, 128);
  } catch (e) {
    showError(e);
  }
}

// Polar plot of log10 p(θ), mirrored about the forward axis.
function drawPhase() {
  const canvas = document.getElementById("phase");
  const ctx = canvas.getContext("2d");
  const n = 361;
  let curve;
  try {
    curve = phase_curve(JSON.stringify(phase), n);
  } catch (e) {
    showError(e);
    return;
  }
  const logs = Array.from(curve, (v) => Math.log10(Math.max(v, 1e-6)));
  const lo = Math.min(...logs), hi = Math.max(...logs);
  const c = canvas.width / 2, rmax = c - 8;
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#334";
  for (const r of [0.25, 0.5, 0.75, 1]) {
    ctx.beginPath();
    ctx.arc(c, c, r * rmax, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.strokeStyle = "#9fd3ff";
  ctx.beginPath();
  for (const sign of [1, -1]) {
    logs.forEach((l, i) => {
      const theta = (Math.PI * i) / (n - 1);
      const r = ((l - lo) / (hi - lo || 1)) * rmax;
      const x = c + r * Math.cos(theta), y = c - sign * r * Math.sin(theta);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
  }
  ctx.stroke();
}

// Previews are expensive on one thread: wait for the user to stop dragging.
let timer = 0;
function schedule(all = true) {
  clearTimeout(timer);
  timer = setTimeout(() => {
    if (all) drawSlice();
    drawPreview();
  }, 250);
  drawPhase();
}

function slider(path, label, step, bound, onInput) {
  const min = SLIDER_MIN[path] ?? bound.min, max = SLIDER_MAX[path] ?? bound.max;
  const el = document.createElement("label");
  el.innerHTML = `<span>${label}</span><input type="range" min="${min}" max="${max}" step="${step}"><output></output>`;
  const input = el.querySelector("input"), out = el.querySelector("output");
  const sync = (v) => {
    input.value = v;
    out.textContent = Number(v).toFixed(step < 1 ? 2 : 0);
  };
  input.addEventListener("input", () => {
    sync(input.value);
    onInput(Number(input.value));
  });
  return { el, sync };
}

function buildControls(bounds, defaults) {
  const panel = document.getElementById("controls");
  const byPath = Object.fromEntries(bounds.map((b) => [b.path, b]));
  const syncers = [];
  for (const [path, label, step] of SLIDERS) {
    const s = slider(path, label, step, byPath[path], (v) => {
      set(scene, path, v);
      schedule();
    });
    syncers.push(() => s.sync(get(scene, path) ?? get(defaults, path)));
    panel.append(s.el);
  }

  const model = document.createElement("label");
  model.innerHTML = `<span>phase</span><select><option value="tthg">two-lobe HG</option><option value="hgd">HG + Draine</option></select><output></output>`;
  const select = model.querySelector("select");
  panel.append(model);
  const g1 = slider("phase_model.tthg.g1", "g1", 0.01, byPath["phase_model.tthg.g1"], (v) => { phase.tthg.g1 = v; schedule(false); });
  const g2 = slider("phase_model.tthg.g2", "g2", 0.01, byPath["phase_model.tthg.g2"], (v) => { phase.tthg.g2 = v; schedule(false); });
  const w = slider("phase_model.tthg.w", "blend w", 0.01, byPath["phase_model.tthg.w"], (v) => { phase.tthg.w = v; schedule(false); });
  const d = slider("phase_model.hgd.d", "droplet d µm", 0.1, { min: 0.1, max: 30 }, (v) => { phase.hgd.d = v; schedule(false); });
  panel.append(g1.el, g2.el, w.el, d.el);
  const syncPhase = () => {
    const kind = phase.tthg ? "tthg" : "hgd";
    select.value = kind;
    for (const s of [g1, g2, w]) s.el.hidden = kind !== "tthg";
    d.el.hidden = kind !== "hgd";
    if (phase.tthg) { g1.sync(phase.tthg.g1); g2.sync(phase.tthg.g2); w.sync(phase.tthg.w); }
    if (phase.hgd) d.sync(phase.hgd.d);
  };
  select.addEventListener("change", () => {
    phase = select.value === "tthg" ? { tthg: { g1: 0.85, g2: -0.3, w: 0.7 } } : { hgd: { d: 4.5 } };
    syncPhase();
    schedule(false);
  });

  const err = document.createElement("div");
  err.id = "error";
  err.className = "error";
  panel.append(err);
  return () => {
    syncers.forEach((f) => f());
    syncPhase();
  };
}

async function main() {
  await init();
  const bounds = JSON.parse(bounds_json());
  const presets = JSON.parse(presets_json());
  const defaults = presets[0].scenes[0];
  const sync = buildControls(bounds, defaults);

  const picker = document.getElementById("preset");
  presets.forEach((p, i) =>
    p.scenes.forEach((s, j) => {
      const opt = new Option(p.scenes.length > 1 ? `${p.name} [${j}]` : p.name, `${i}:${j}`);
      opt.title = p.description;
      picker.add(opt);
    }),
  );
  picker.addEventListener("change", () => {
    const [i, j] = picker.value.split(":").map(Number);
    const s = presets[i].scenes[j];
    scene = { cloud_params: { ...s.cloud_params }, sun: { ...s.sun }, time_s: s.time_s, exposure: s.exposure };
    phase = structuredClone(s.phase_model);
    sync();
    schedule();
  });
  document.getElementById("size").addEventListener("change", () => schedule(false));
  document.getElementById("slice-h").addEventListener("input", drawSlice);

  sync();
  drawPhase();
  drawSlice();
  drawPreview();
}

main().catch((e) => (status.textContent = `failed: ${e}`));
