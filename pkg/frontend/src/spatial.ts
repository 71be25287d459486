import type { ArtifactPoint, Rect } from "./types.js";

/**
 * Uniform-grid spatial index for hit-testing 1e4+ points without scanning
 * the whole cloud on every mouse move.
 */
export class GridIndex {
  private readonly cells = new Map<string, number[]>();
  private readonly cellSize: number;
  private readonly points: ArtifactPoint[];
  private readonly bounds: Rect;

  constructor(points: ArtifactPoint[], targetPerCell = 16) {
    this.points = points;
    let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
    for (const p of points) {
      if (p.x < x0) x0 = p.x;
      if (p.y < y0) y0 = p.y;
      if (p.x > x1) x1 = p.x;
      if (p.y > y1) y1 = p.y;
    }
    this.bounds = points.length
      ? { x0, y0, x1, y1 }
      : { x0: 0, y0: 0, x1: 0, y1: 0 };
    const area = Math.max((x1 - x0) * (y1 - y0), 1e-12);
    this.cellSize = points.length
      ? Math.sqrt((area * targetPerCell) / points.length) || 1
      : 1;
    points.forEach((p, i) => {
      const key = this.key(p.x, p.y);
      const bucket = this.cells.get(key);
      if (bucket) bucket.push(i);
      else this.cells.set(key, [i]);
    });
  }

  private key(x: number, y: number): string {
    return `${Math.floor(x / this.cellSize)}:${Math.floor(y / this.cellSize)}`;
  }

  /** Index of the nearest point within `radius` of (x, y), or -1. */
  nearest(x: number, y: number, radius: number): number {
    if (this.points.length === 0) return -1;
    const r = Math.max(radius, 0);
    // clamp the scan to the indexed bounds; queries far outside the data
    // would otherwise walk an unbounded range of empty cells
    const c0x = Math.floor(Math.max(x - r, this.bounds.x0) / this.cellSize);
    const c1x = Math.floor(Math.min(x + r, this.bounds.x1) / this.cellSize);
    const c0y = Math.floor(Math.max(y - r, this.bounds.y0) / this.cellSize);
    const c1y = Math.floor(Math.min(y + r, this.bounds.y1) / this.cellSize);
    let best = -1;
    let bestD2 = r * r;
    for (let cx = c0x; cx <= c1x; cx++) {
      for (let cy = c0y; cy <= c1y; cy++) {
        const bucket = this.cells.get(`${cx}:${cy}`);
        if (!bucket) continue;
        for (const i of bucket) {
          const p = this.points[i];
          const d2 = (p.x - x) ** 2 + (p.y - y) ** 2;
          if (d2 <= bestD2) {
            bestD2 = d2;
            best = i;
          }
        }
      }
    }
    return best;
  }

  /** Indices of all points inside the rectangle (inclusive edges). */
  inRect(rect: Rect): number[] {
    if (this.points.length === 0) return [];
    const x0 = Math.min(rect.x0, rect.x1);
    const x1 = Math.max(rect.x0, rect.x1);
    const y0 = Math.min(rect.y0, rect.y1);
    const y1 = Math.max(rect.y0, rect.y1);
    const out: number[] = [];
    const c0x = Math.floor(Math.max(x0, this.bounds.x0) / this.cellSize);
    const c1x = Math.floor(Math.min(x1, this.bounds.x1) / this.cellSize);
    const c0y = Math.floor(Math.max(y0, this.bounds.y0) / this.cellSize);
    const c1y = Math.floor(Math.min(y1, this.bounds.y1) / this.cellSize);
    for (let cx = c0x; cx <= c1x; cx++) {
      for (let cy = c0y; cy <= c1y; cy++) {
        const bucket = this.cells.get(`${cx}:${cy}`);
        if (!bucket) continue;
        for (const i of bucket) {
          const p = this.points[i];
          if (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) out.push(i);
        }
      }
    }
    return out.sort((a, b) => a - b);
  }
}
