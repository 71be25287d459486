import type { ArtifactPoint, ColorMode } from "./types.js";

/** Categorical palette; cycles beyond 12 classes. */
export const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1b9e77", "#7570b3",
];

export function classColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

/** Light-to-dark ramp for scalar shading (0 = light, 1 = dark). */
export function rampColor(t: number): string {
  const clamped = Math.min(Math.max(t, 0), 1);
  const light = 235 - Math.round(195 * clamped);
  return `rgb(${light}, ${Math.round(light * 0.82)}, ${255 - Math.round(130 * clamped)})`;
}

export interface ColorContext {
  mode: ColorMode;
  /** entropy = -conf.entropy when present */
  entropyRange: [number, number] | null;
  confRange: [number, number] | null;
  confModel: string | null;
}

export function pointColor(p: ArtifactPoint, ctx: ColorContext): string {
  switch (ctx.mode) {
    case "predicted":
      return classColor(p.pred);
    case "true-label":
      return p.label === null ? "#999999" : classColor(p.label);
    case "entropy": {
      if (!ctx.entropyRange || p.conf.entropy === undefined) return "#999999";
      const [lo, hi] = ctx.entropyRange;
      const h = -p.conf.entropy;
      return rampColor(hi > lo ? (h - lo) / (hi - lo) : 0.5);
    }
    case "confidence": {
      if (!ctx.confRange || !ctx.confModel) return "#999999";
      const s = p.conf[ctx.confModel];
      if (s === undefined) return "#999999";
      const [lo, hi] = ctx.confRange;
      // darker = LESS confident, mirroring entropy shading
      return rampColor(hi > lo ? 1 - (s - lo) / (hi - lo) : 0.5);
    }
  }
}
