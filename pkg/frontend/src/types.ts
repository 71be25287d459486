/** Schema of the run artifact produced by the distillmap CLI. */

export interface ArtifactPoint {
  id: string;
  x: number;
  y: number;
  /** teacher's argmax class index */
  pred: number;
  /** true class index, or null when the table carried no labels */
  label: number | null;
  /** five largest [classIndex, probability] pairs, descending */
  top: [number, number][];
  /** probability mass outside the top list */
  other: number;
  /** per-model confidence scores, higher = more confident */
  conf: Record<string, number>;
}

export interface StudentModel {
  means: number[][];
  scales: number[][][];
  nu: number;
  prior: number[];
}

export interface ContourLevel {
  level: number;
  paths: number[][][];
}

export interface Artifact {
  version: string;
  seed: number;
  config: Record<string, unknown>;
  classes: string[];
  points: ArtifactPoint[];
  student: StudentModel;
  metrics: Record<string, unknown>;
  contours: ContourLevel[];
}

export type ColorMode = "predicted" | "true-label" | "entropy" | "confidence";

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface SelectionSummary {
  ids: string[];
  histogram: Record<string, number>;
  mean_conf: number | null;
}
