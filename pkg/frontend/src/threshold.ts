import type { ArtifactPoint } from "./types.js";

export interface ThresholdReadout {
  kept: number;
  total: number;
  keptFraction: number;
  /** accuracy of teacher predictions on the kept set; null without labels or empty set */
  accuracy: number | null;
  rejectedIds: string[];
}

/** Range of a confidence score across the artifact. */
export function scoreRange(points: ArtifactPoint[], model: string): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of points) {
    const s = p.conf[model];
    if (s === undefined) continue;
    if (s < lo) lo = s;
    if (s > hi) hi = s;
  }
  return [lo, hi];
}

/**
 * Keep points whose score is >= delta; report the kept fraction and the
 * kept-set accuracy recomputed from the artifact's own labels. This is pure
 * set arithmetic; no number is re-derived from the model.
 */
export function thresholdReadout(
  points: ArtifactPoint[],
  model: string,
  delta: number,
): ThresholdReadout {
  let kept = 0;
  let correct = 0;
  let labelled = 0;
  const rejectedIds: string[] = [];
  for (const p of points) {
    const s = p.conf[model];
    if (s !== undefined && s >= delta) {
      kept += 1;
      if (p.label !== null) {
        labelled += 1;
        if (p.label === p.pred) correct += 1;
      }
    } else {
      rejectedIds.push(p.id);
    }
  }
  return {
    kept,
    total: points.length,
    keptFraction: points.length ? kept / points.length : 0,
    accuracy: labelled > 0 ? correct / labelled : null,
    rejectedIds,
  };
}
