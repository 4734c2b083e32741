import init, { square_line_collapse, gallery_pipeline, fixed_point_trace } from "./pkg/metrize_demo.js";

const $ = (id) => document.getElementById(id);

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = `<p class="err">${String(e.message ?? e)}</p>`;
  }
}

function fmt(x) {
  return typeof x === "number" ? x.toPrecision(6) : String(x);
}

function matrix(labels, rows) {
  const head = `<tr><th></th>${labels.map((l) => `<th>${l}</th>`).join("")}</tr>`;
  const body = rows.map((r, i) => `<tr><th>${labels[i]}</th>${r.map((v) => `<td>${fmt(v)}</td>`).join("")}</tr>`).join("");
  return `<table>${head}${body}</table>`;
}

function runCollapse() {
  const out = $("sl-out");
  guard(out, () => {
    const r = JSON.parse(square_line_collapse(Number($("sl-n").value), $("sl-p").value));
    const rows = r.from_zero.map((e) => `<tr><td>${e.x}</td><td>${fmt(e.D)}</td><td>${fmt(e.d)}</td></tr>`).join("");
    out.innerHTML = `<p>d(0,1) = <b>${r.d01}</b> (${fmt(r.d01_f64)}), metric: ${r.is_metric}, sandwich: ${r.sandwich}</p>`
      + (r.notes.length ? `<pre>${r.notes.join("\n")}</pre>` : "")
      + `<table><tr><th>x</th><th>D(0,x)</th><th>d(0,x)</th></tr>${rows}</table>`;
  });
}

function runPipeline() {
  const out = $("gp-out");
  guard(out, () => {
    const r = JSON.parse(gallery_pipeline($("gp-name").value, Number($("gp-n").value), BigInt($("gp-seed").value || 0)));
    const a = r.audits;
    out.innerHTML = `<p>${r.points} points, claimed ${r.claimed_class}. Triangle: ${a.triangle}, (IV): ${a.iv}, `
      + `&nu;=2: ${a.nu2 ?? "skipped"}, K<sub>min</sub> = ${a.k_min}.</p>`
      + `<p>K used ${r.k_used}, exponent p = ${r.exponent}; induced metric: ${r.induced.is_metric}, `
      + `sandwich ${r.induced.sandwich} (lower factor ${r.induced.lower_factor}).</p>`
      + (r.induced.notes.length ? `<pre>${r.induced.notes.join("\n")}</pre>` : "")
      + (r.points <= 12 ? `<h3>D</h3>${matrix(r.labels, r.D)}<h3>d</h3>${matrix(r.labels, r.d)}` : "");
  });
}

function runFixpoint() {
  const out = $("fp-out");
  guard(out, () => {
    const r = JSON.parse(fixed_point_trace($("fp-l").value, $("fp-c").value, $("fp-x").value, Number($("fp-q").value), $("fp-t").value));
    const steps = r.steps.filter((s) => s > 0);
    const w = 560, h = 160;
    const logs = steps.map(Math.log10);
    const lo = Math.min(...logs, -1), hi = Math.max(...logs, 0);
    const bw = w / Math.max(steps.length, 1);
    const bars = logs
      .map((v, i) => {
        const y = ((hi - v) / (hi - lo)) * h;
        return `<rect class="bar" x="${i * bw}" y="${y}" width="${Math.max(bw - 1, 1)}" height="${h - y}"></rect>`;
      })
      .join("");
    out.innerHTML = `<p>${r.stop_reason} after ${r.steps.length} steps, x = ${fmt(r.iterates.at(-1))}, `
      + `&lambda;<sub>D</sub> = ${fmt(r.lambda_hat)}, geometric decay: ${r.decay_pass}</p>`
      + `<svg width="${w}" height="${h}" role="img" aria-label="log10 step distances">${bars}</svg>`
      + `<pre>${[...r.notes, ...r.assumptions.map((a) => "assumes " + a)].join("\n")}</pre>`;
  });
}

await init();
$("sl-run").addEventListener("click", runCollapse);
$("gp-run").addEventListener("click", runPipeline);
$("fp-run").addEventListener("click", runFixpoint);
runCollapse();
runPipeline();
runFixpoint();
