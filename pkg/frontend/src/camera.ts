import type { Rect } from "./types.js";

/**
 * Pan/zoom transform between data space and canvas pixels.
 * y is flipped so data-y grows upward on screen.
 */
export class Camera {
  scale = 1;
  offsetX = 0;
  offsetY = 0;

  toScreen(x: number, y: number): [number, number] {
    return [x * this.scale + this.offsetX, -y * this.scale + this.offsetY];
  }

  toData(px: number, py: number): [number, number] {
    return [(px - this.offsetX) / this.scale, -(py - this.offsetY) / this.scale];
  }

  fit(bounds: Rect, width: number, height: number, margin = 32): void {
    const spanX = Math.max(bounds.x1 - bounds.x0, 1e-9);
    const spanY = Math.max(bounds.y1 - bounds.y0, 1e-9);
    this.scale = Math.min(
      (width - 2 * margin) / spanX,
      (height - 2 * margin) / spanY,
    );
    const cx = (bounds.x0 + bounds.x1) / 2;
    const cy = (bounds.y0 + bounds.y1) / 2;
    this.offsetX = width / 2 - cx * this.scale;
    this.offsetY = height / 2 + cy * this.scale;
  }

  pan(dxPixels: number, dyPixels: number): void {
    this.offsetX += dxPixels;
    this.offsetY += dyPixels;
  }

  /** Zoom by a factor keeping the data point under (px, py) fixed. */
  zoomAt(px: number, py: number, factor: number): void {
    const clamped = Math.min(Math.max(this.scale * factor, 1e-6), 1e9);
    const real = clamped / this.scale;
    this.offsetX = px - (px - this.offsetX) * real;
    this.offsetY = py - (py - this.offsetY) * real;
    this.scale = clamped;
  }
}
