import type { Camera } from "./camera.js";
import type { ColorContext } from "./color.js";
import { pointColor } from "./color.js";
import type { Artifact, ArtifactPoint } from "./types.js";

export interface RenderState {
  colorCtx: ColorContext;
  visibleClasses: Set<number>;
  /** points below the threshold on this model are greyed out */
  thresholdModel: string | null;
  threshold: number | null;
  selection: Set<number>;
  hovered: number;
  showContours: boolean;
}

/** Misclassified points draw as crosses, correct/unlabelled ones as dots. */
export function glyphFor(p: ArtifactPoint): "dot" | "cross" {
  return p.label !== null && p.label !== p.pred ? "cross" : "dot";
}

export function isVisible(p: ArtifactPoint, visibleClasses: Set<number>): boolean {
  return visibleClasses.size === 0 || visibleClasses.has(p.pred);
}

export function isRejected(p: ArtifactPoint, state: RenderState): boolean {
  if (state.thresholdModel === null || state.threshold === null) return false;
  const s = p.conf[state.thresholdModel];
  return s === undefined || s < state.threshold;
}

export function draw(
  ctx: CanvasRenderingContext2D,
  artifact: Artifact,
  camera: Camera,
  state: RenderState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  if (state.showContours) {
    ctx.strokeStyle = "#888888";
    ctx.lineWidth = 1;
    for (const contour of artifact.contours) {
      for (const path of contour.paths) {
        if (path.length < 2) continue;
        ctx.beginPath();
        path.forEach(([x, y], i) => {
          const [px, py] = camera.toScreen(x, y);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.stroke();
      }
    }
  }

  const r = artifact.points.length > 5000 ? 2 : 3;
  artifact.points.forEach((p, i) => {
    if (!isVisible(p, state.visibleClasses)) return;
    const [px, py] = camera.toScreen(p.x, p.y);
    if (px < -8 || py < -8 || px > width + 8 || py > height + 8) return;
    const rejected = isRejected(p, state);
    ctx.globalAlpha = rejected ? 0.15 : 0.85;
    ctx.fillStyle = ctx.strokeStyle = rejected ? "#777777" : pointColor(p, state.colorCtx);
    if (glyphFor(p) === "cross") {
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(px - r - 1, py - r - 1);
      ctx.lineTo(px + r + 1, py + r + 1);
      ctx.moveTo(px - r - 1, py + r + 1);
      ctx.lineTo(px + r + 1, py - r - 1);
      ctx.stroke();
    } else {
      ctx.beginPath();
      ctx.arc(px, py, r, 0, 2 * Math.PI);
      ctx.fill();
    }
    if (state.selection.has(i) || state.hovered === i) {
      ctx.globalAlpha = 1;
      ctx.strokeStyle = "#111111";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(px, py, r + 2.5, 0, 2 * Math.PI);
      ctx.stroke();
    }
  });

  // class means as stars
  ctx.globalAlpha = 1;
  artifact.student.means.forEach(([mx, my], k) => {
    if (state.visibleClasses.size > 0 && !state.visibleClasses.has(k)) return;
    const [px, py] = camera.toScreen(mx, my);
    ctx.fillStyle = "#222222";
    drawStar(ctx, px, py, 6);
  });
  ctx.globalAlpha = 1;
}

function drawStar(ctx: CanvasRenderingContext2D, x: number, y: number, r: number): void {
  ctx.beginPath();
  for (let i = 0; i < 10; i++) {
    const radius = i % 2 === 0 ? r : r / 2.4;
    const angle = (Math.PI / 5) * i - Math.PI / 2;
    const px = x + radius * Math.cos(angle);
    const py = y + radius * Math.sin(angle);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  }
  ctx.closePath();
  ctx.fill();
}
