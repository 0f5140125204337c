// Small canvas line charts for the live telemetry. The vertical axis
// auto-scales with hysteresis: it widens as soon as a sample leaves the
// current range, but only shrinks after the data has stayed well inside it
// for `HYSTERESIS_TICKS` consecutive updates, so the trace does not pump.

import type { SeriesPoint } from "./viewstate.js";

export const HYSTERESIS_TICKS = 10;

export interface AxisRange {
  lo: number;
  hi: number;
}

export class AutoScale {
  private range: AxisRange | null = null;
  private shrinkStreak = 0;

  update(points: SeriesPoint[]): AxisRange {
    if (points.length === 0) return this.range ?? { lo: 0, hi: 1 };
    let lo = Infinity;
    let hi = -Infinity;
    for (const p of points) {
      lo = Math.min(lo, p.value);
      hi = Math.max(hi, p.value);
    }
    if (hi === lo) {
      hi = lo + 1;
    }
    const pad = 0.05 * (hi - lo);
    const target = { lo: lo - pad, hi: hi + pad };
    if (this.range === null) {
      this.range = target;
      return this.range;
    }
    if (target.lo < this.range.lo || target.hi > this.range.hi) {
      this.range = {
        lo: Math.min(target.lo, this.range.lo),
        hi: Math.max(target.hi, this.range.hi),
      };
      this.shrinkStreak = 0;
      return this.range;
    }
    const width = this.range.hi - this.range.lo;
    if (target.hi - target.lo < 0.5 * width) {
      this.shrinkStreak += 1;
      if (this.shrinkStreak >= HYSTERESIS_TICKS) {
        this.range = target;
        this.shrinkStreak = 0;
      }
    } else {
      this.shrinkStreak = 0;
    }
    return this.range;
  }
}

export interface ChartStyle {
  stroke: string;
  label: string;
  fixedRange?: AxisRange; // e.g. congruence probability lives in [0, 1]
}

export function drawChart(
  ctx: CanvasRenderingContext2D,
  points: SeriesPoint[],
  scale: AutoScale,
  style: ChartStyle,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  const range = style.fixedRange ?? scale.update(points);
  ctx.fillText(style.label, 6, 14);
  if (points.length < 2) return;
  const t0 = points[0].t;
  const t1 = points[points.length - 1].t;
  const dt = Math.max(1, t1 - t0);
  ctx.strokeStyle = style.stroke;
  ctx.beginPath();
  points.forEach((p, i) => {
    const x = ((p.t - t0) / dt) * (width - 10) + 5;
    const frac = (p.value - range.lo) / (range.hi - range.lo);
    const y = height - 5 - frac * (height - 24);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillText(range.hi.toPrecision(3), width - 44, 14);
  ctx.fillText(range.lo.toPrecision(3), width - 44, height - 6);
}
