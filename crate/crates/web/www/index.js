import init, { eigen_branches, photon_numbers, noise_spectra } from "./pkg/wgm_gyro_web.js";

const COLORS = ["#1f5fa8", "#c4452b", "#2b8a3e"];

// Draws line series sharing one x axis. Non-finite y values break the line.
function plot(canvas, x, series, opts = {}) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, w, h);

  const tf = opts.log ? (v) => (v > 0 ? Math.log10(v) : NaN) : (v) => v;
  let lo = Infinity, hi = -Infinity;
  for (const s of series) {
    for (const v of s.y) {
      const t = tf(v);
      if (Number.isFinite(t)) { lo = Math.min(lo, t); hi = Math.max(hi, t); }
    }
  }
  if (!(hi > lo)) { hi = lo + 1; lo -= 1; }
  const pad = 0.05 * (hi - lo);
  lo -= pad; hi += pad;
  const m = { l: 56, r: 12, t: 10, b: 28 };
  const x0 = x[0], x1 = x[x.length - 1];
  const px = (v) => m.l + ((v - x0) / (x1 - x0)) * (w - m.l - m.r);
  const py = (v) => h - m.b - ((v - lo) / (hi - lo)) * (h - m.t - m.b);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui, sans-serif";
  ctx.strokeRect(m.l, m.t, w - m.l - m.r, h - m.t - m.b);
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + (k / 4) * (x1 - x0);
    ctx.fillText(xv.toFixed(1), px(xv) - 10, h - 10);
    const yv = lo + (k / 4) * (hi - lo);
    const label = opts.log ? "1e" + yv.toFixed(1) : yv.toPrecision(3);
    ctx.fillText(label, 4, py(yv) + 4);
  }
  if (opts.xlabel) ctx.fillText(opts.xlabel, w - m.r - 60, h - 10);

  series.forEach((s, i) => {
    ctx.strokeStyle = s.color || COLORS[i % COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let pen = false;
    for (let j = 0; j < x.length; j++) {
      const t = tf(s.y[j]);
      if (!Number.isFinite(t)) { pen = false; continue; }
      if (pen) ctx.lineTo(px(x[j]), py(t)); else ctx.moveTo(px(x[j]), py(t));
      pen = true;
    }
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, w - m.r - 90, m.t + 14 + 14 * i);
  });
}

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function showValues() {
  for (const o of document.querySelectorAll("output")) o.value = $(o.htmlFor).value;
}

function drawEigen() {
  const n = 401;
  const v = eigen_branches(num("e-gain"), num("e-J"), $("e-conv").value, n);
  const x = v.subarray(0, n);
  plot($("eigen-re"), x, [
    { label: "Re E+", y: v.subarray(n, 2 * n) },
    { label: "Re E-", y: v.subarray(3 * n, 4 * n) },
  ], { xlabel: "shift" });
  plot($("eigen-im"), x, [
    { label: "Im E+", y: v.subarray(2 * n, 3 * n) },
    { label: "Im E-", y: v.subarray(4 * n, 5 * n) },
  ], { xlabel: "shift" });
}

function drawPhotons() {
  const n = 2001;
  const v = photon_numbers(1.5, 5, num("s-delta"), num("s-eta-a"), num("s-eta-b"), n);
  plot($("photons"), v.subarray(0, n), [
    { label: "n_a", y: v.subarray(n, 2 * n) },
    { label: "n_b", y: v.subarray(2 * n, 3 * n) },
  ], { log: $("s-log").checked, xlabel: "detuning" });
}

function drawSpectra() {
  const n = 2401;
  const v = noise_spectra(num("n-gain"), 5, num("n-delta"), 12, n);
  const [stable, closed, refined, height, maxRe] = v.subarray(3 * n);
  const info = $("n-info");
  if (stable) {
    info.className = "note";
    info.textContent = `left peak: closed form ${closed.toFixed(4)}, located ${refined.toFixed(4)}, ` +
      `height ${height.toPrecision(4)}; slowest decay ${(-maxRe).toFixed(4)}`;
  } else {
    info.className = "note warn";
    info.textContent = `unstable (drift real part ${maxRe.toFixed(4)} > 0): no stationary spectrum; curves show the formula only`;
  }
  plot($("spectra"), v.subarray(0, n), [
    { label: "S_a", y: v.subarray(n, 2 * n) },
    { label: "S_b", y: v.subarray(2 * n, 3 * n) },
  ], { log: $("n-log").checked, xlabel: "frequency" });
}

function wire(ids, draw) {
  for (const id of ids) $(id).addEventListener("input", () => { showValues(); draw(); });
}

await init();
showValues();
wire(["e-gain", "e-J", "e-conv"], drawEigen);
wire(["s-delta", "s-eta-a", "s-eta-b", "s-log"], drawPhotons);
wire(["n-delta", "n-gain", "n-log"], drawSpectra);
window.addEventListener("resize", () => { drawEigen(); drawPhotons(); drawSpectra(); });
drawEigen();
drawPhotons();
drawSpectra();
