import { confidenceModels, dataBounds, parseArtifact, SchemaError } from "./artifact.js";
import { Camera } from "./camera.js";
import { classColor, type ColorContext } from "./color.js";
import { draw, glyphFor, isRejected, type RenderState } from "./render.js";
import { selectionToJson, summarizeSelection } from "./selection.js";
import { GridIndex } from "./spatial.js";
import { scoreRange, thresholdReadout } from "./threshold.js";
import type { Artifact, ColorMode, Rect } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("scatter");
const ctx = canvas.getContext("2d")!;

interface Scene {
  artifact: Artifact;
  camera: Camera;
  index: GridIndex;
  models: string[];
  state: RenderState;
  path: number[];
}

let scene: Scene | null = null;

function fail(message: string): void {
  const panel = $("error-panel");
  panel.textContent = message;
  panel.style.display = "block";
}

function clearError(): void {
  $("error-panel").style.display = "none";
}

// ---------------------------------------------------------------------------
// scene setup

function buildScene(artifact: Artifact): Scene {
  const camera = new Camera();
  camera.fit(dataBounds(artifact.points) as Rect, canvas.width, canvas.height);
  const models = confidenceModels(artifact);
  const colorCtx: ColorContext = {
    mode: "predicted",
    entropyRange: null,
    confRange: null,
    confModel: models.find((m) => m !== "entropy") ?? models[0] ?? null,
  };
  if (models.includes("entropy")) {
    const [lo, hi] = scoreRange(artifact.points, "entropy");
    colorCtx.entropyRange = [-hi, -lo];
  }
  if (colorCtx.confModel) {
    colorCtx.confRange = scoreRange(artifact.points, colorCtx.confModel);
  }
  return {
    artifact,
    camera,
    index: new GridIndex(artifact.points),
    models,
    state: {
      colorCtx,
      visibleClasses: new Set(),
      thresholdModel: null,
      threshold: null,
      selection: new Set(),
      hovered: -1,
      showContours: artifact.contours.length > 0,
    },
    path: [],
  };
}

function loadText(text: string): void {
  clearError();
  let artifact: Artifact;
  try {
    artifact = parseArtifact(text);
  } catch (err) {
    fail(err instanceof SchemaError ? err.message : String(err));
    return;
  }
  const t0 = performance.now();
  scene = buildScene(artifact);
  buildSidebar();
  render();
  $("status").textContent =
    `${artifact.points.length} points, ${artifact.classes.length} classes ` +
    `(indexed in ${(performance.now() - t0).toFixed(0)} ms)`;
}

// ---------------------------------------------------------------------------
// sidebar

function buildSidebar(): void {
  if (!scene) return;
  const { artifact, models, state } = scene;

  const legend = $("legend");
  legend.innerHTML = "";
  artifact.classes.forEach((name, k) => {
    const row = document.createElement("label");
    row.className = "legend-row";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => {
      // an empty set means "all classes visible"
      const boxes = [...legend.querySelectorAll("input")] as HTMLInputElement[];
      const visible = boxes.flatMap((b, i) => (b.checked ? [i] : []));
      state.visibleClasses =
        visible.length === artifact.classes.length ? new Set() : new Set(visible);
      render();
    });
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = classColor(k);
    row.append(box, swatch, document.createTextNode(name));
    legend.appendChild(row);
  });

  const modeSel = $<HTMLSelectElement>("color-mode");
  const hasLabels = artifact.points.some((p) => p.label !== null);
  const modes: ColorMode[] = ["predicted"];
  if (hasLabels) modes.push("true-label");
  if (models.includes("entropy")) modes.push("entropy");
  if (state.colorCtx.confModel) modes.push("confidence");
  modeSel.innerHTML = modes.map((m) => `<option value="${m}">${m}</option>`).join("");
  modeSel.onchange = () => {
    state.colorCtx.mode = modeSel.value as ColorMode;
    render();
  };

  const threshSel = $<HTMLSelectElement>("threshold-model");
  threshSel.innerHTML =
    '<option value="">off</option>' +
    models.map((m) => `<option value="${m}">${m}</option>`).join("");
  const slider = $<HTMLInputElement>("threshold");
  threshSel.onchange = () => {
    if (!scene) return;
    if (threshSel.value === "") {
      scene.state.thresholdModel = null;
      scene.state.threshold = null;
    } else {
      scene.state.thresholdModel = threshSel.value;
      const [lo, hi] = scoreRange(artifact.points, threshSel.value);
      slider.min = String(lo);
      slider.max = String(hi);
      slider.step = String((hi - lo) / 500 || 1);
      slider.value = String(lo);
      scene.state.threshold = lo;
    }
    updateThreshold();
    render();
  };
  slider.oninput = () => {
    if (!scene || scene.state.thresholdModel === null) return;
    scene.state.threshold = Number(slider.value);
    updateThreshold();
    render();
  };

  const contourBox = $<HTMLInputElement>("show-contours");
  contourBox.disabled = artifact.contours.length === 0;
  contourBox.checked = artifact.contours.length > 0;
  contourBox.onchange = () => {
    state.showContours = contourBox.checked;
    render();
  };

  updateThreshold();
  updateSelectionPanel();
}

function updateThreshold(): void {
  const out = $("threshold-readout");
  if (!scene || scene.state.thresholdModel === null || scene.state.threshold === null) {
    out.textContent = "threshold off";
    return;
  }
  const r = thresholdReadout(
    scene.artifact.points, scene.state.thresholdModel, scene.state.threshold,
  );
  const acc = r.accuracy === null ? "n/a" : (100 * r.accuracy).toFixed(2) + "%";
  out.textContent =
    `kept ${r.kept}/${r.total} (${(100 * r.keptFraction).toFixed(1)}%), ` +
    `kept-set accuracy ${acc}`;
  $<HTMLButtonElement>("export-rejected").onclick = () => {
    download("rejected_ids.json", JSON.stringify({ ids: r.rejectedIds }));
  };
}

// ---------------------------------------------------------------------------
// detail + selection panels

function showDetail(i: number): void {
  const panel = $("detail");
  if (!scene || i < 0) {
    panel.innerHTML = "<em>hover a point</em>";
    return;
  }
  const { artifact } = scene;
  const p = artifact.points[i];
  const rows = p.top
    .map(([cls, prob]) => {
      const name = artifact.classes[cls] ?? String(cls);
      return (
        `<div class="bar-row"><span class="bar-label">${name}</span>` +
        `<span class="bar" style="width:${Math.round(prob * 140)}px;` +
        `background:${classColor(cls)}"></span>` +
        `<span class="bar-value">${prob.toFixed(4)}</span></div>`
      );
    })
    .join("");
  const label = p.label === null ? "—" : artifact.classes[p.label] ?? String(p.label);
  const conf = Object.entries(p.conf)
    .map(([m, s]) => `${m}: ${s.toFixed(3)}`)
    .join(", ");
  panel.innerHTML =
    `<div><b>${p.id}</b> pred <b>${artifact.classes[p.pred]}</b>, true <b>${label}</b>` +
    (glyphFor(p) === "cross" ? " <span class='miss'>misclassified</span>" : "") +
    `</div>${rows}` +
    `<div class="bar-row"><span class="bar-label">other</span>` +
    `<span class="bar" style="width:${Math.round(p.other * 140)}px;background:#ccc"></span>` +
    `<span class="bar-value">${p.other.toFixed(4)}</span></div>` +
    `<div class="conf">${conf}</div>`;
}

function updateSelectionPanel(): void {
  const panel = $("selection-panel");
  if (!scene || scene.state.selection.size === 0) {
    panel.textContent = "no selection";
    drawPathChart();
    return;
  }
  const indices = [...scene.state.selection].sort((a, b) => a - b);
  const model = scene.state.thresholdModel ?? scene.state.colorCtx.confModel;
  const summary = summarizeSelection(scene.artifact, indices, model);
  const hist = Object.entries(summary.histogram)
    .sort((a, b) => b[1] - a[1])
    .map(([name, count]) => `${name}: ${count}`)
    .join(", ");
  const mean = summary.mean_conf === null ? "n/a" : summary.mean_conf.toFixed(3);
  panel.textContent = `${summary.ids.length} selected — ${hist} — mean conf ${mean}`;
  $<HTMLButtonElement>("export-selection").onclick = () => {
    download("selection.json", selectionToJson(summary));
  };
  drawPathChart();
}

/** Stacked probability strips across the clicked path of points. */
function drawPathChart(): void {
  const chart = $<HTMLCanvasElement>("path-chart");
  const c = chart.getContext("2d")!;
  c.clearRect(0, 0, chart.width, chart.height);
  if (!scene || scene.path.length < 2) return;
  const { artifact } = scene;
  const w = chart.width / scene.path.length;
  scene.path.forEach((idx, col) => {
    const p = artifact.points[idx];
    let y = 0;
    for (const [cls, prob] of p.top) {
      const h = prob * chart.height;
      c.fillStyle = classColor(cls);
      c.fillRect(col * w, y, w - 1, h);
      y += h;
    }
    c.fillStyle = "#cccccc";
    c.fillRect(col * w, y, w - 1, chart.height - y);
  });
}

function download(name: string, text: string): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

// ---------------------------------------------------------------------------
// canvas interaction

let dragging = false;
let selecting: Rect | null = null;
let lastX = 0;
let lastY = 0;

function hitRadius(): number {
  return scene ? 6 / scene.camera.scale : 0;
}

canvas.addEventListener("mousedown", (ev) => {
  if (!scene) return;
  const [dx, dy] = scene.camera.toData(ev.offsetX, ev.offsetY);
  if (ev.shiftKey) {
    selecting = { x0: dx, y0: dy, x1: dx, y1: dy };
  } else {
    dragging = true;
  }
  lastX = ev.offsetX;
  lastY = ev.offsetY;
});

canvas.addEventListener("mousemove", (ev) => {
  if (!scene) return;
  if (dragging) {
    scene.camera.pan(ev.offsetX - lastX, ev.offsetY - lastY);
    lastX = ev.offsetX;
    lastY = ev.offsetY;
    render();
    return;
  }
  const [dx, dy] = scene.camera.toData(ev.offsetX, ev.offsetY);
  if (selecting) {
    selecting.x1 = dx;
    selecting.y1 = dy;
    render();
    drawSelectionRect();
    return;
  }
  const hit = scene.index.nearest(dx, dy, hitRadius());
  if (hit !== scene.state.hovered) {
    scene.state.hovered = hit;
    showDetail(hit);
    render();
  }
});

canvas.addEventListener("mouseup", (ev) => {
  if (!scene) return;
  if (selecting) {
    const indices = scene.index.inRect(selecting);
    scene.state.selection = new Set(indices);
    selecting = null;
    updateSelectionPanel();
    render();
    return;
  }
  dragging = false;
  const moved = Math.abs(ev.offsetX - lastX) + Math.abs(ev.offsetY - lastY);
  if (moved < 3) {
    const [dx, dy] = scene.camera.toData(ev.offsetX, ev.offsetY);
    const hit = scene.index.nearest(dx, dy, hitRadius());
    if (hit >= 0 && (ev.ctrlKey || ev.metaKey)) {
      scene.path.push(hit);
      drawPathChart();
    } else if (hit < 0) {
      scene.state.selection.clear();
      scene.path = [];
      showDetail(-1);
      updateSelectionPanel();
      render();
    }
  }
});

canvas.addEventListener("mouseleave", () => {
  dragging = false;
  selecting = null;
});

canvas.addEventListener("wheel", (ev) => {
  if (!scene) return;
  ev.preventDefault();
  scene.camera.zoomAt(ev.offsetX, ev.offsetY, Math.exp(-ev.deltaY * 0.0015));
  render();
});

function drawSelectionRect(): void {
  if (!scene || !selecting) return;
  const [x0, y0] = scene.camera.toScreen(selecting.x0, selecting.y0);
  const [x1, y1] = scene.camera.toScreen(selecting.x1, selecting.y1);
  ctx.strokeStyle = "#333333";
  ctx.setLineDash([4, 3]);
  ctx.strokeRect(Math.min(x0, x1), Math.min(y0, y1), Math.abs(x1 - x0), Math.abs(y1 - y0));
  ctx.setLineDash([]);
}

function render(): void {
  if (!scene) return;
  draw(ctx, scene.artifact, scene.camera, scene.state, canvas.width, canvas.height);
}

// ---------------------------------------------------------------------------
// file input

$<HTMLInputElement>("file-input").addEventListener("change", (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  const reader = new FileReader();
  reader.onload = () => loadText(String(reader.result));
  reader.readAsText(file);
});

showDetail(-1);

export { loadText, isRejected };
