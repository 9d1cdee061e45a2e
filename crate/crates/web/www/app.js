import init, { term_weights, train_topics, cluster_points } from "./pkg/flatm_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = [[230, 85, 13], [49, 130, 189], [49, 163, 84], [117, 107, 177], [222, 45, 38], [99, 99, 99]];

function fmt(x) {
  if (x === null) return "-inf";
  return Math.abs(x) >= 1e4 || (x !== 0 && Math.abs(x) < 1e-3) ? x.toExponential(3) : x.toFixed(4);
}

function status(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "error" : "";
}

function attempt(statusId, fn) {
  try {
    fn();
  } catch (e) {
    status(statusId, String(e.message || e), true);
  }
}

function table(el, head, rows) {
  el.innerHTML = "";
  const tr = el.insertRow();
  for (const h of head) {
    const th = document.createElement("th");
    th.textContent = h;
    tr.appendChild(th);
  }
  for (const row of rows) {
    const r = el.insertRow();
    for (const cell of row) r.insertCell().textContent = cell;
  }
}

function runWeights() {
  attempt("weights-status", () => {
    const out = JSON.parse(term_weights($("corpus").value, $("weights-method").value));
    table(
      $("weights-table"),
      ["term", "raw", "clamped", "df", "count"],
      out.terms.map((t) => [t.term, fmt(t.raw), fmt(t.clamped), t.df, t.count]),
    );
    status("weights-status", `${out.terms.length} terms in ${out.documents} documents, ${out.clamped} clamped`);
  });
}

function runTopics() {
  attempt("topics-status", () => {
    const started = performance.now();
    const out = JSON.parse(
      train_topics(
        $("corpus").value,
        $("topics-method").value,
        Number($("topics-k").value),
        Number($("topics-seed").value),
        $("topics-cascade").checked,
        6,
      ),
    );
    const words = $("topics-words");
    words.innerHTML = "";
    out.topics.forEach((t, k) => {
      const div = document.createElement("div");
      div.className = "topic";
      const label = document.createElement("b");
      label.textContent = `topic ${k} (${(100 * t.mass).toFixed(1)}%)`;
      div.appendChild(label);
      div.append(t.words.map((w) => `${w.term} ${w.prob.toFixed(3)}`).join(", "));
      words.appendChild(div);
    });
    table(
      $("topics-docs"),
      ["doc", ...out.topics.map((_, k) => `T${k}`)],
      out.documents.map((d) => [d.id, ...d.topics.map((p) => p.toFixed(3))]),
    );
    const ms = (performance.now() - started).toFixed(0);
    const iters = out.stages.map((s) => s.iterations).join("/");
    status("topics-status", `${out.vocabulary} words, iterations per stage ${iters}, ${ms} ms`);
  });
}

let points = [];
let result = null;

function draw() {
  const canvas = $("fcm-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  points.forEach((p, j) => {
    let rgb = [120, 120, 120];
    if (result && result.membership[j]) {
      rgb = [0, 0, 0];
      result.membership[j].forEach((u, k) => {
        const c = COLORS[k % COLORS.length];
        for (let i = 0; i < 3; i++) rgb[i] += u * c[i];
      });
    }
    ctx.fillStyle = `rgb(${rgb.map(Math.round).join(",")})`;
    ctx.beginPath();
    ctx.arc(p[0], p[1], 4, 0, 2 * Math.PI);
    ctx.fill();
  });
  if (result) {
    result.centers.forEach((v, k) => {
      const c = COLORS[k % COLORS.length];
      ctx.strokeStyle = `rgb(${c.join(",")})`;
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.moveTo(v[0] - 9, v[1] - 9);
      ctx.lineTo(v[0] + 9, v[1] + 9);
      ctx.moveTo(v[0] + 9, v[1] - 9);
      ctx.lineTo(v[0] - 9, v[1] + 9);
      ctx.stroke();
    });
  }
}

function gaussian() {
  const u = 1 - Math.random();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * Math.random());
}

function randomBlobs() {
  const canvas = $("fcm-canvas");
  const k = Number($("fcm-c").value) || 3;
  points = [];
  for (let b = 0; b < k; b++) {
    const cx = 60 + Math.random() * (canvas.width - 120);
    const cy = 60 + Math.random() * (canvas.height - 120);
    for (let i = 0; i < 40; i++) points.push([cx + 25 * gaussian(), cy + 25 * gaussian()]);
  }
  result = null;
  draw();
}

function runClusters() {
  attempt("fcm-status", () => {
    result = JSON.parse(
      cluster_points(
        JSON.stringify(points),
        Number($("fcm-c").value),
        Number($("fcm-q").value),
        Number($("fcm-seed").value),
      ),
    );
    const j = result.objective[result.objective.length - 1];
    const state = result.converged ? "converged" : "stopped";
    status("fcm-status", `${state} after ${result.iterations} iterations, objective ${fmt(j)}`);
    draw();
  });
}

$("fcm-canvas").addEventListener("click", (e) => {
  if (e.shiftKey) {
    points = [];
  } else {
    const rect = e.target.getBoundingClientRect();
    points.push([e.clientX - rect.left, e.clientY - rect.top]);
  }
  result = null;
  draw();
});

await init();
$("weights-run").onclick = runWeights;
$("topics-run").onclick = runTopics;
$("fcm-run").onclick = runClusters;
$("fcm-random").onclick = randomBlobs;
randomBlobs();
runWeights();
