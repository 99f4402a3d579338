// Built with: wasm-bindgen --target web --out-dir www/pkg target/wasm32-unknown-unknown/release/csit_demo.wasm
import init, { trainingSweep, boundary, speedSweep } from "./pkg/csit_demo.js";

const $ = (id) => document.getElementById(id);
const params = () => ({ nt: +$("nt").value, snr: +$("snr").value, scheme: $("scheme").value });
const COLORS = { tdd: "#1b9e77", analog: "#d95f02", digital: "#7570b3", qam: "#e7298a" };

function plot(series, xlabel, ylabel) {
  const c = $("plot"), g = c.getContext("2d");
  const pad = 50, w = c.width - 2 * pad, h = c.height - 2 * pad;
  g.clearRect(0, 0, c.width, c.height);
  const pts = series.flatMap((s) => s.points);
  if (!pts.length) return;
  const [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  const [y0, y1] = [0, Math.max(...pts.map((p) => p[1])) * 1.05 || 1];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * w;
  const sy = (y) => pad + h - ((y - y0) / (y1 - y0)) * h;
  g.strokeStyle = "#888";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#222";
  g.fillText(xlabel, pad + w / 2 - 30, c.height - 12);
  g.fillText(ylabel, 4, pad - 10);
  g.fillText(x0.toPrecision(3), pad, pad + h + 14);
  g.fillText(x1.toPrecision(3), pad + w - 20, pad + h + 14);
  g.fillText(y1.toPrecision(3), 4, pad + 4);
  series.forEach((s, i) => {
    g.strokeStyle = s.color;
    g.beginPath();
    s.points.forEach(([x, y], j) => (j ? g.lineTo(sx(x), sy(y)) : g.moveTo(sx(x), sy(y))));
    g.stroke();
    g.fillStyle = s.color;
    g.fillText(s.name, pad + w - 120, pad + 16 + 14 * i);
  });
}

function guarded(fn) {
  return () => {
    $("status").textContent = "";
    try { fn(); } catch (e) { $("status").textContent = String(e); }
  };
}

$("btn-training").onclick = guarded(() => {
  const { nt, snr } = params();
  const rows = JSON.parse(trainingSweep(nt, snr, 50, 2000, 50));
  const series = Object.keys(COLORS).map((k) => ({
    name: `T_tr ${k}`,
    color: COLORS[k],
    points: rows.filter((r) => r.scheme === k).map((r) => [r.block_len, r.t_tr]),
  }));
  plot(series, "block length T", "training symbols");
});

$("btn-boundary").onclick = guarded(() => {
  const { nt, snr, scheme } = params();
  const pts = JSON.parse(boundary(nt, snr, 200, scheme, 99));
  plot([{ name: scheme, color: COLORS[scheme], points: pts.map((p) => [p.r_up_bps / 1e3, p.r_down_bps / 1e3]) }],
    "uplink kbps", "downlink kbps");
});

$("btn-speed").onclick = guarded(() => {
  const { nt, snr, scheme } = params();
  const rows = JSON.parse(speedSweep(nt, snr, 30, scheme, 150));
  plot([{ name: scheme, color: COLORS[scheme], points: rows.map((r) => [r.speed * 3.6, r.sum_rate_bps / 1e3]) }],
    "speed km/h", "downlink kbps");
});

await init();
$("btn-training").click();
