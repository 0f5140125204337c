// One affine transform maps the normalized workspace [-1,1]^2 onto the
// square drawing area; every rendered position goes through it, and pointer
// input goes through its inverse.

import type { Point } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

function span(vp: Viewport): number {
  return Math.min(vp.width, vp.height) - 2 * vp.margin;
}

function origin(vp: Viewport): Point {
  // center the square area inside the canvas
  const s = span(vp);
  return [(vp.width - s) / 2, (vp.height - s) / 2];
}

export function toCanvas(p: Point, vp: Viewport): Point {
  const s = span(vp);
  const [ox, oy] = origin(vp);
  const px = ox + ((p[0] + 1) / 2) * s;
  const py = oy + ((1 - p[1]) / 2) * s; // workspace y is up, canvas y is down
  return [px, py];
}

export function toWorkspace(px: number, py: number, vp: Viewport): Point {
  const s = span(vp);
  const [ox, oy] = origin(vp);
  const x = ((px - ox) / s) * 2 - 1;
  const y = 1 - ((py - oy) / s) * 2;
  return [clamp(x), clamp(y)];
}

function clamp(v: number): number {
  return Math.max(-1, Math.min(1, v));
}
