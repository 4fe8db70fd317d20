// Expects the bindings generated by
//   wasm-bindgen --target web --out-dir www/pkg target/wasm32-unknown-unknown/release/owc_wasm.wasm
import init, { Demo } from "./pkg/owc_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
let demo;

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40, 10, w - 50, h - 30);
}

function lines(canvas, series, labels) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const all = series.flat();
  const max = Math.max(...all) * 1.05 || 1;
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.forEach((v, k) => {
      const x = 40 + (k / (s.length - 1)) * (w - 50);
      const y = h - 20 - (v / max) * (h - 30);
      k ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
    if (labels) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(labels[i], w - 110, 24 + 14 * i);
    }
  });
  ctx.fillStyle = "#555";
  ctx.fillText(max.toExponential(2), 2, 18);
  ctx.fillText("tone", w / 2, h - 4);
}

function bars(canvas, values) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const max = Math.max(...values) || 1;
  const bw = (w - 50) / values.length;
  values.forEach((v, i) => {
    const bh = (v / max) * (h - 30);
    ctx.fillStyle = i ? "#d62728" : "#1f77b4";
    ctx.fillRect(42 + i * bw, h - 20 - bh, bw - 4, bh);
    ctx.fillStyle = "#555";
    ctx.fillText(String(i), 42 + i * bw + bw / 2 - 3, h - 6);
  });
  ctx.fillText("|h(n)| / |h(0)|", 45, 22);
}

function scatter(canvas, pts) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  ctx.moveTo(w / 2, 0); ctx.lineTo(w / 2, h);
  ctx.moveTo(0, h / 2); ctx.lineTo(w, h / 2);
  ctx.stroke();
  // 64-QAM with unit average energy spans about +-1.08.
  const s = w / 2 / 1.6;
  ctx.fillStyle = "rgba(31,119,180,0.45)";
  for (let i = 0; i < pts.length; i += 2) {
    const x = w / 2 + pts[i] * s, y = h / 2 - pts[i + 1] * s;
    if (x >= 0 && x < w && y >= 0 && y < h) ctx.fillRect(x, y, 2, 2);
  }
}

function guard(fn) {
  return async () => {
    try {
      $("status").textContent = "";
      await fn();
    } catch (e) {
      $("status").textContent = e.message ?? String(e);
    }
  };
}

function drawChannel() {
  const v = demo.drawChannel($("cls").value, Number($("chSeed").value));
  $("chInfo").textContent = `label ${v.label}, ${v.attempts} draw(s)`;
  lines($("resp"), [Array.from(v.responseMag)], ["|H(k)|"]);
  const taps = Array.from(v.taps);
  bars($("taps"), taps.map((t) => t / taps[0]));
}

function sendSlot() {
  const c = demo.compare(Number($("snr").value), Number($("slotSeed").value));
  const names = c.names, nmse = c.nmse, flat = c.curves, truth = Array.from(c.truth);
  const n = truth.length;
  const curves = names.map((_, i) => Array.from(flat.slice(i * n, (i + 1) * n)));
  lines($("est"), [truth, ...curves], ["true", ...names]);
  $("nmse").innerHTML = "<tr><th>estimator</th><th>NMSE</th><th>dB</th></tr>" +
    names.map((nm, i) => `<tr><td>${nm}</td><td>${nmse[i].toExponential(3)}</td>` +
      `<td>${(10 * Math.log10(nmse[i])).toFixed(1)}</td></tr>`).join("");
  $("eq").innerHTML = [...names, "direct"].map((nm) => `<option>${nm}</option>`).join("");
}

function showConstellation() {
  const c = demo.constellation($("eq").value);
  $("ber").textContent = `BER ${c.ber.toExponential(3)}`;
  scatter($("const"), c.points);
}

async function loadWeights() {
  const files = Array.from($("weights").files);
  const pick = (cls) => files.find((f) => f.name.toUpperCase().includes(cls));
  const chosen = ["LDS", "MDS", "HDS"].map(pick);
  if (chosen.some((f) => !f)) throw new Error("select three files named after LDS, MDS and HDS");
  const bytes = await Promise.all(chosen.map(async (f) => new Uint8Array(await f.arrayBuffer())));
  demo.loadWeights(...bytes);
  $("status").textContent = "networks loaded; send a slot to compare them";
}

await init();
demo = new Demo(0);
$("status").textContent = "";
$("snr").oninput = () => ($("snrVal").textContent = `${$("snr").value} dB`);
$("draw").onclick = guard(drawChannel);
$("send").onclick = guard(sendSlot);
$("show").onclick = guard(showConstellation);
$("weights").onchange = guard(loadWeights);
guard(drawChannel)();
