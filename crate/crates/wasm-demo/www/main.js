import init, { Demo } from "./pkg/drillguide_wasm_demo.js";

const SCALE = 16;
const TICK_MS = 5;

await init();
const demo = new Demo();
const w = demo.width(), h = demo.height(), spacing = demo.spacing_mm();
const $ = (id) => document.getElementById(id);

function setup(canvas) {
  canvas.width = w;
  canvas.height = h;
  canvas.style.width = `${w * SCALE}px`;
  canvas.style.height = `${h * SCALE}px`;
  return canvas.getContext("2d");
}
const fieldCtx = setup($("field"));
const zoneCtx = setup($("zones"));

function paint(ctx, rgba) {
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
}

function value(id) {
  const v = Number($(id).value);
  $(`${id}-v`).textContent = v;
  return v;
}

$("row").max = demo.rows() - 1;

function drawField() {
  try {
    paint(fieldCtx, demo.field_image(value("row"), value("t-red"), value("t-yellow")));
    $("field-err").textContent = "";
  } catch (e) {
    $("field-err").textContent = e;
  }
}

function drawZones() {
  paint(zoneCtx, demo.zone_image(value("row")));
}

function showCounts(c) {
  $("counts").textContent = `green ${c[0]}  yellow ${c[1]}  red ${c[2]}  other bone ${c[3]}`;
}

function replan() {
  showCounts(demo.replan(value("red-post"), value("red-lat"), value("yellow")));
  drawZones();
}

function show(info) {
  const r = $("readout");
  r.className = `warn-${info.warning}`;
  r.textContent =
    `t        ${info.t_ms} ms\n` +
    `removed  ${info.removed}\n` +
    `force    ${info.force_n.toFixed(2)} N\n` +
    `audio    ${info.audio_hz.toFixed(0)} Hz\n` +
    `bone     ${info.bone_mm.toFixed(2)} mm\n` +
    `warning  ${info.warning}\n` +
    `left     ${demo.remaining()}`;
  info.free();
}

let pointer = null;
let timer = null;

function pose() {
  const rect = $("zones").getBoundingClientRect();
  const x = ((pointer.x - rect.left) / rect.width) * w;
  const z = (1 - (pointer.y - rect.top) / rect.height) * h;
  return [x * spacing, (value("row") + 0.5) * spacing, z * spacing];
}

function step() {
  const [x, y, z] = pose();
  show(demo.drill(x, y, z, true));
  drawZones();
}

$("zones").addEventListener("mousedown", (e) => {
  pointer = { x: e.clientX, y: e.clientY };
  step();
  timer = setInterval(step, TICK_MS);
});
$("zones").addEventListener("mousemove", (e) => {
  if (pointer) pointer = { x: e.clientX, y: e.clientY };
});
window.addEventListener("mouseup", () => {
  if (!pointer) return;
  clearInterval(timer);
  const [x, y, z] = pose();
  show(demo.drill(x, y, z, false));
  pointer = null;
});

$("row").addEventListener("input", () => { drawField(); drawZones(); });
for (const id of ["t-red", "t-yellow"]) $(id).addEventListener("input", drawField);
for (const id of ["red-post", "red-lat", "yellow"]) $(id).addEventListener("input", replan);
$("guidance").addEventListener("change", (e) => { demo.set_guidance(e.target.checked); drawZones(); });
$("reset").addEventListener("click", () => { demo.reset(); drawZones(); });

drawField();
showCounts(demo.counts());
drawZones();
