import init, { expression_curve, pack_items, pareto_fronts } from "./pkg/algoforge_wasm.js";

const $ = (id) => document.getElementById(id);
const palette = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

function report(el, text, isError) {
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function drawCurve() {
  const res = JSON.parse(expression_curve($("expr").value, +$("lo").value, +$("hi").value, 400));
  const cv = $("curve"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  if (res.error) return report($("curve-out"), res.error, true);
  // clip the view to the central 98% so a single spike does not flatten the plot
  const sorted = [...res.ys].sort((a, b) => a - b);
  let lo = sorted[Math.floor(sorted.length * 0.01)], hi = sorted[Math.ceil(sorted.length * 0.99) - 1];
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const sx = (x) => ((x - res.xs[0]) / (res.xs[res.xs.length - 1] - res.xs[0])) * (cv.width - 20) + 10;
  const sy = (y) => cv.height - 10 - ((Math.min(Math.max(y, lo), hi) - lo) / (hi - lo)) * (cv.height - 20);
  g.strokeStyle = "#ccc";
  if (lo < 0 && hi > 0) { g.beginPath(); g.moveTo(0, sy(0)); g.lineTo(cv.width, sy(0)); g.stroke(); }
  g.strokeStyle = "#1f77b4";
  g.beginPath();
  res.xs.forEach((x, i) => (i ? g.lineTo(sx(x), sy(res.ys[i])) : g.moveTo(sx(x), sy(res.ys[i]))));
  g.stroke();
  report($("curve-out"), `parsed as: ${res.canonical}  (${res.nodes} nodes, y shown in [${lo.toPrecision(3)}, ${hi.toPrecision(3)}])`);
}

function drawBins() {
  const res = JSON.parse(pack_items($("prio").value, BigInt($("seed").value || 0), +$("items").value, +$("cap").value));
  const cv = $("bins"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  if (res.error) return report($("bins-out"), res.error, true);
  const w = Math.max(2, Math.min(24, (cv.width - 10) / res.bins.length));
  const h = cv.height - 20;
  res.bins.forEach((items, b) => {
    let y = cv.height - 10;
    items.forEach((size, k) => {
      const px = (size / res.capacity) * h;
      g.fillStyle = palette[(b + k) % palette.length];
      g.fillRect(5 + b * w, y - px, w - 1, px);
      y -= px;
    });
    g.strokeStyle = "#999";
    g.strokeRect(5 + b * w, 10, w - 1, h);
  });
  report(
    $("bins-out"),
    `${res.bins.length} bins (lower bound ${res.lower_bound}), excess ${(100 * res.score).toFixed(2)}%; ` +
      `best fit uses ${res.baseline_bins} bins, excess ${(100 * res.baseline_score).toFixed(2)}%`,
  );
}

let points = [];

function drawPareto() {
  const cv = $("pareto"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  if (!points.length) return report($("pareto-out"), "no points yet");
  const res = JSON.parse(pareto_fronts(JSON.stringify(points)));
  if (res.error) return report($("pareto-out"), res.error, true);
  const px = ([a, b]) => [a * cv.width, cv.height - b * cv.height];
  res.fronts.forEach((front, r) => {
    const pts = [...front].sort((i, j) => points[i][0] - points[j][0]);
    g.strokeStyle = palette[r % palette.length];
    g.beginPath();
    pts.forEach((i, k) => { const [x, y] = px(points[i]); k ? g.lineTo(x, y) : g.moveTo(x, y); });
    g.stroke();
  });
  points.forEach((p, i) => {
    const [x, y] = px(p);
    g.fillStyle = palette[res.rank[i] % palette.length];
    g.beginPath();
    g.arc(x, y, 4, 0, 2 * Math.PI);
    g.fill();
  });
  report($("pareto-out"), `${points.length} points in ${res.fronts.length} fronts; first front: ${res.fronts[0].join(", ")}`);
}

await init();
for (const id of ["expr", "lo", "hi"]) $(id).addEventListener("input", drawCurve);
for (const id of ["prio", "items", "cap", "seed"]) $(id).addEventListener("input", drawBins);
$("pareto").addEventListener("click", (ev) => {
  const cv = ev.target, r = cv.getBoundingClientRect();
  const p = [(ev.clientX - r.left) / r.width, 1 - (ev.clientY - r.top) / r.height];
  if (ev.shiftKey && points.length) {
    let best = 0;
    points.forEach((q, i) => { if (Math.hypot(q[0] - p[0], q[1] - p[1]) < Math.hypot(points[best][0] - p[0], points[best][1] - p[1])) best = i; });
    points.splice(best, 1);
  } else {
    points.push(p);
  }
  drawPareto();
});
$("random").addEventListener("click", () => {
  points = Array.from({ length: 40 }, () => [Math.random(), Math.random()]);
  drawPareto();
});
$("clear").addEventListener("click", () => { points = []; drawPareto(); });
drawCurve();
drawBins();
drawPareto();
