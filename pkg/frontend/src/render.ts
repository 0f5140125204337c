// Workspace canvas: dataset watermark, recent trail, end-effector marker.

import type { Point, WatermarkPolyline } from "./protocol.js";
import { toCanvas, type Viewport } from "./transform.js";
import type { ViewState } from "./viewstate.js";

const WATERMARK_COLOR = "#d9d2c4";
const TRAIL_COLOR = "173, 216, 230"; // light blue, alpha applied per segment
const EFFECTOR_COLOR = "#c62828";

export function drawWorkspace(
  ctx: CanvasRenderingContext2D,
  vs: ViewState,
  vp: Viewport,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#fbfaf7";
  ctx.fillRect(0, 0, vp.width, vp.height);
  if (vs.hello) {
    drawWatermark(ctx, vs.hello.watermark, vp);
  }
  drawTrail(ctx, vs.trail, vp);
  if (vs.effector) {
    drawEffector(ctx, vs.effector, vp, vs.humanActive);
  }
}

function drawWatermark(
  ctx: CanvasRenderingContext2D,
  polylines: WatermarkPolyline[],
  vp: Viewport,
): void {
  ctx.strokeStyle = WATERMARK_COLOR;
  ctx.lineWidth = 2;
  for (const poly of polylines) {
    ctx.beginPath();
    poly.points.forEach((p, i) => {
      const [x, y] = toCanvas(p, vp);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

function drawTrail(ctx: CanvasRenderingContext2D, trail: Point[], vp: Viewport): void {
  ctx.lineWidth = 3;
  for (let i = 1; i < trail.length; i++) {
    const alpha = 0.15 + 0.6 * (i / trail.length); // newest segments strongest
    ctx.strokeStyle = `rgba(${TRAIL_COLOR}, ${alpha.toFixed(3)})`;
    ctx.beginPath();
    const [x0, y0] = toCanvas(trail[i - 1], vp);
    const [x1, y1] = toCanvas(trail[i], vp);
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  }
}

function drawEffector(
  ctx: CanvasRenderingContext2D,
  p: Point,
  vp: Viewport,
  humanActive: boolean,
): void {
  const [x, y] = toCanvas(p, vp);
  ctx.beginPath();
  ctx.arc(x, y, 7, 0, 2 * Math.PI);
  ctx.fillStyle = EFFECTOR_COLOR;
  ctx.fill();
  if (humanActive) {
    ctx.beginPath();
    ctx.arc(x, y, 11, 0, 2 * Math.PI);
    ctx.strokeStyle = EFFECTOR_COLOR;
    ctx.lineWidth = 2;
    ctx.stroke();
  }
}
