import type { Artifact, ArtifactPoint } from "./types.js";

/** Raised when the loaded file violates the artifact schema; names the field. */
export class SchemaError extends Error {
  readonly field: string;

  constructor(field: string, detail: string) {
    super(`artifact field "${field}": ${detail}`);
    this.field = field;
  }
}

function need(cond: boolean, field: string, detail: string): asserts cond {
  if (!cond) throw new SchemaError(field, detail);
}

const POINT_FIELDS = ["id", "x", "y", "pred", "top", "other", "conf"] as const;

function validatePoint(raw: Record<string, unknown>, index: number, k: number): ArtifactPoint {
  for (const f of POINT_FIELDS) {
    need(f in raw, `points[${index}].${f}`, "missing");
  }
  const x = raw.x as number;
  const y = raw.y as number;
  need(Number.isFinite(x) && Number.isFinite(y), `points[${index}].x`, "not finite");
  const pred = raw.pred as number;
  need(Number.isInteger(pred) && pred >= 0 && pred < k, `points[${index}].pred`, "out of range");
  const label = (raw.label ?? null) as number | null;
  need(
    label === null || (Number.isInteger(label) && label >= 0 && label < k),
    `points[${index}].label`,
    "out of range",
  );
  const top = raw.top as [number, number][];
  need(Array.isArray(top) && top.every((t) => Array.isArray(t) && t.length === 2),
    `points[${index}].top`, "expected [class, prob] pairs");
  return {
    id: String(raw.id),
    x,
    y,
    pred,
    label,
    top,
    other: raw.other as number,
    conf: (raw.conf ?? {}) as Record<string, number>,
  };
}

/**
 * Validate a parsed JSON document against the artifact schema.
 * Unknown extra fields are ignored for forward compatibility.
 */
export function validateArtifact(raw: unknown): Artifact {
  need(typeof raw === "object" && raw !== null, "(root)", "not an object");
  const doc = raw as Record<string, unknown>;
  for (const f of ["version", "seed", "config", "classes", "points", "student", "metrics"]) {
    need(f in doc && doc[f] !== undefined, f, "missing");
  }
  const classes = doc.classes as string[];
  need(Array.isArray(classes) && classes.length >= 1, "classes", "expected a non-empty list");
  const rawPoints = doc.points as unknown[];
  need(Array.isArray(rawPoints), "points", "expected a list");
  const points = rawPoints.map((p, i) =>
    validatePoint(p as Record<string, unknown>, i, classes.length),
  );
  const student = doc.student as Record<string, unknown>;
  for (const f of ["means", "scales", "nu", "prior"]) {
    need(typeof student === "object" && student !== null && f in student, `student.${f}`, "missing");
  }
  const contours = (doc.contours ?? []) as Artifact["contours"];
  need(Array.isArray(contours), "contours", "expected a list");
  return {
    version: String(doc.version),
    seed: doc.seed as number,
    config: (doc.config ?? {}) as Record<string, unknown>,
    classes: classes.map(String),
    points,
    student: student as unknown as Artifact["student"],
    metrics: (doc.metrics ?? {}) as Record<string, unknown>,
    contours,
  };
}

export function parseArtifact(text: string): Artifact {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError("(root)", `not valid JSON: ${(err as Error).message}`);
  }
  return validateArtifact(raw);
}

/** Names of confidence models present on every point (usable for scoring). */
export function confidenceModels(artifact: Artifact): string[] {
  if (artifact.points.length === 0) return [];
  let names = Object.keys(artifact.points[0].conf);
  for (const p of artifact.points) {
    names = names.filter((n) => n in p.conf);
    if (names.length === 0) break;
  }
  return names;
}

export function dataBounds(points: ArtifactPoint[]): { x0: number; y0: number; x1: number; y1: number } {
  if (points.length === 0) return { x0: -1, y0: -1, x1: 1, y1: 1 };
  let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
  for (const p of points) {
    if (p.x < x0) x0 = p.x;
    if (p.y < y0) y0 = p.y;
    if (p.x > x1) x1 = p.x;
    if (p.y > y1) y1 = p.y;
  }
  return { x0, y0, x1, y1 };
}
