import init, { cumulant, ruin, tail } from "./pkg/ruinsim_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const output = $("output");
const status = $("status");

function config() {
  const paths = Math.max(1, Math.floor(num("paths")));
  return JSON.stringify({
    version: 1,
    model: { a: num("a"), sigma2: num("sigma2") },
    insurance: {
      c: num("c"),
      claim: { family: "exponential", rate: num("claim") },
      interarrival: { family: "exponential", rate: num("arrival") },
    },
    run: { seed: Math.floor(num("seed")), n_paths: paths, direct_paths: paths, u_grid: $("ugrid").value },
  });
}

function fmt(x) {
  if (x === null || x === undefined) return "";
  if (!Number.isFinite(x)) return String(x);
  return Math.abs(x) >= 1e-3 || x === 0 ? x.toFixed(4) : x.toExponential(2);
}

function plot(points, { logx = false, logy = false, marker = null } = {}) {
  const canvas = document.createElement("canvas");
  canvas.width = 640;
  canvas.height = 320;
  const g = canvas.getContext("2d");
  const tx = logx ? Math.log10 : (v) => v;
  const ty = logy ? Math.log10 : (v) => v;
  const pts = points.filter(([x, y]) => Number.isFinite(tx(x)) && Number.isFinite(ty(y)));
  if (pts.length < 2) return canvas;
  const xs = pts.map(([x]) => tx(x));
  const ys = pts.map(([, y]) => ty(y));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys, logy ? Infinity : 0), Math.max(...ys, logy ? -Infinity : 0)];
  const m = 30;
  const px = (v) => m + ((v - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * m);
  const py = (v) => canvas.height - m - ((v - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * m);
  g.strokeStyle = "#999";
  if (!logy && y0 < 0 && y1 > 0) {
    g.beginPath();
    g.moveTo(m, py(0));
    g.lineTo(canvas.width - m, py(0));
    g.stroke();
  }
  g.strokeStyle = "#1565c0";
  g.lineWidth = 2;
  g.beginPath();
  pts.forEach(([x, y], i) => (i ? g.lineTo : g.moveTo).call(g, px(tx(x)), py(ty(y))));
  g.stroke();
  if (marker !== null) {
    g.fillStyle = "#c62828";
    g.beginPath();
    g.arc(px(tx(marker)), py(0), 5, 0, 2 * Math.PI);
    g.fill();
  }
  g.fillStyle = "#444";
  g.fillText(`${logx ? "log10 " : ""}x in [${fmt(x0)}, ${fmt(x1)}]`, m, canvas.height - 8);
  g.fillText(`${logy ? "log10 " : ""}y in [${fmt(y0)}, ${fmt(y1)}]`, m, 14);
  return canvas;
}

function table(header, rows) {
  const t = document.createElement("table");
  t.innerHTML =
    `<tr>${header.map((h) => `<th>${h}</th>`).join("")}</tr>` +
    rows.map((r) => `<tr>${r.map((v) => `<td>${typeof v === "number" ? fmt(v) : v ?? ""}</td>`).join("")}</tr>`).join("");
  return t;
}

function text(s) {
  const p = document.createElement("p");
  p.textContent = s;
  return p;
}

const views = {
  cumulant(r) {
    const beta = r.beta === null ? "no positive root" : `beta = ${r.beta.toFixed(6)}`;
    return [
      text(`${beta}; a_V = ${fmt(r.a_v)}; conditions: ${r.overall}`),
      plot(r.curve, { marker: r.beta }),
      table(["check", "status", "detail"], r.checks.map((c) => [c.name, c.status, c.detail])),
    ];
  },
  ruin(r) {
    return [
      text(`beta = ${fmt(r.beta)}, ${r.n_paths} perpetuities`),
      table(
        ["u", "lower", "upper", "direct", "stderr"],
        r.rows.map((x) => [x.u, x.lower, x.upper ?? "undefined", x.direct, x.direct_stderr]),
      ),
    ];
  },
  tail(r) {
    const out = [text(`P(Y > 0) = ${fmt(r.gbar0)}, beta = ${fmt(r.beta)}`)];
    if (r.slope) out.push(text(`log-log slope on [${r.window.map(fmt).join(", ")}]: beta_hat = ${fmt(r.slope.beta_hat)} +- ${fmt(r.slope.stderr)}`));
    if (r.hill) out.push(text(`Hill (k = ${r.hill.k}): beta_hat = ${fmt(r.hill.beta_hat)} [${fmt(r.hill.lo)}, ${fmt(r.hill.hi)}]`));
    if (!r.slope && !r.hill) out.push(text("too few positive samples for a tail fit; raise the path count"));
    out.push(plot(r.profile.map((p) => [p.u, p.gbar]), { logx: true, logy: true }));
    return out;
  },
};

function run(name, fn) {
  status.textContent = "running…";
  status.className = "";
  // Let the status paint before the synchronous simulation starts.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const result = JSON.parse(fn(config()));
      output.replaceChildren(...views[name](result));
      status.textContent = `${name}: ${((performance.now() - t0) / 1000).toFixed(2)} s`;
    } catch (e) {
      status.textContent = String(e.message ?? e);
      status.className = "error";
    }
  }, 20);
}

await init();
status.textContent = "ready";
$("run-cumulant").onclick = () => run("cumulant", cumulant);
$("run-ruin").onclick = () => run("ruin", ruin);
$("run-tail").onclick = () => run("tail", tail);
