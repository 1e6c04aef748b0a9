/** Shared pan/zoom geometry for the side-by-side panes.
 *
 * Both panes draw their raster with one viewport, so a content pixel
 * lands on the same pane-local screen position left and right — the
 * synchronization invariant the tests assert to sub-pixel precision.
 * Offsets are CSS pixels of image pixel (0, 0) inside the pane; scale
 * is CSS pixels per image pixel.
 */

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface Point {
  x: number;
  y: number;
}

export const MIN_SCALE = 0.05;
export const MAX_SCALE = 64;

/** Wheel sensitivity: scale factor per wheel delta unit. */
const WHEEL_INTENSITY = 0.0015;

function clampScale(scale: number): number {
  return Math.min(MAX_SCALE, Math.max(MIN_SCALE, scale));
}

/** Letterbox an image into a pane, centered. */
export function fit(
  imageW: number,
  imageH: number,
  paneW: number,
  paneH: number,
): Viewport {
  const scale = clampScale(Math.min(paneW / imageW, paneH / imageH));
  return {
    scale,
    offsetX: (paneW - imageW * scale) / 2,
    offsetY: (paneH - imageH * scale) / 2,
  };
}

export function imageToScreen(v: Viewport, ix: number, iy: number): Point {
  return { x: v.offsetX + ix * v.scale, y: v.offsetY + iy * v.scale };
}

export function screenToImage(v: Viewport, sx: number, sy: number): Point {
  return { x: (sx - v.offsetX) / v.scale, y: (sy - v.offsetY) / v.scale };
}

export function pan(v: Viewport, dx: number, dy: number): Viewport {
  return { scale: v.scale, offsetX: v.offsetX + dx, offsetY: v.offsetY + dy };
}

/** Rescale around a pane-local anchor: the image point under the cursor stays put. */
export function zoomAt(v: Viewport, sx: number, sy: number, factor: number): Viewport {
  const scale = clampScale(v.scale * factor);
  const applied = scale / v.scale;
  return {
    scale,
    offsetX: sx - (sx - v.offsetX) * applied,
    offsetY: sy - (sy - v.offsetY) * applied,
  };
}

/** CSS transform for an element with transform-origin 0 0. */
export function transformCss(v: Viewport): string {
  return `translate(${v.offsetX}px, ${v.offsetY}px) scale(${v.scale})`;
}

export type PaneId = "left" | "right";

/**
 * One viewport fanned out to every attached pane. Interactions are
 * reported against whichever pane the cursor is over; every pane gets
 * the identical updated viewport.
 */
export class SyncedPanes {
  private view: Viewport;
  private readonly home: Viewport;
  private readonly panes = new Map<PaneId, (v: Viewport) => void>();

  constructor(imageW: number, imageH: number, paneW: number, paneH: number) {
    this.home = fit(imageW, imageH, paneW, paneH);
    this.view = this.home;
  }

  get current(): Viewport {
    return this.view;
  }

  /** Register a pane's renderer; it is applied immediately and on every change. */
  attach(id: PaneId, apply: (v: Viewport) => void): void {
    this.panes.set(id, apply);
    apply(this.view);
  }

  wheelZoom(_source: PaneId, sx: number, sy: number, deltaY: number): void {
    this.update(zoomAt(this.view, sx, sy, Math.exp(-deltaY * WHEEL_INTENSITY)));
  }

  zoomAt(_source: PaneId, sx: number, sy: number, factor: number): void {
    this.update(zoomAt(this.view, sx, sy, factor));
  }

  dragPan(dx: number, dy: number): void {
    this.update(pan(this.view, dx, dy));
  }

  reset(): void {
    this.update(this.home);
  }

  private update(next: Viewport): void {
    this.view = next;
    for (const apply of this.panes.values()) apply(next);
  }
}
