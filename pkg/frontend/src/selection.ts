import type { Artifact, ArtifactPoint, SelectionSummary } from "./types.js";

/**
 * Summarize a set of selected points: class histogram over teacher
 * predictions plus the mean of the active confidence score.
 */
export function summarizeSelection(
  artifact: Artifact,
  indices: number[],
  model: string | null,
): SelectionSummary {
  const histogram: Record<string, number> = {};
  let confSum = 0;
  let confCount = 0;
  const ids: string[] = [];
  for (const i of indices) {
    const p: ArtifactPoint = artifact.points[i];
    ids.push(p.id);
    const name = artifact.classes[p.pred] ?? String(p.pred);
    histogram[name] = (histogram[name] ?? 0) + 1;
    if (model !== null && p.conf[model] !== undefined) {
      confSum += p.conf[model];
      confCount += 1;
    }
  }
  return {
    ids,
    histogram,
    mean_conf: confCount ? confSum / confCount : null,
  };
}

export function selectionToJson(summary: SelectionSummary): string {
  return JSON.stringify(summary);
}
