import { describe, expect, it } from "vitest";
import { toCanvas, toWorkspace, type Viewport } from "../src/transform.js";

const vp: Viewport = { width: 640, height: 640, margin: 0 };

describe("workspace/canvas affine transform", () => {
  it("maps the workspace center to the canvas center", () => {
    expect(toCanvas([0, 0], vp)).toEqual([320, 320]);
  });

  it("maps corners to corners with the right orientation", () => {
    expect(toCanvas([-1, 1], vp)).toEqual([0, 0]); // top-left = (-1, +1)
    expect(toCanvas([1, -1], vp)).toEqual([640, 640]);
  });

  it("pointer at canvas corners yields (+/-1, +/-1)", () => {
    expect(toWorkspace(0, 0, vp)).toEqual([-1, 1]);
    expect(toWorkspace(640, 640, vp)).toEqual([1, -1]);
    expect(toWorkspace(640, 0, vp)).toEqual([1, 1]);
  });

  it("round-trips interior points within a tenth of a pixel", () => {
    for (const p of [[0.3, -0.7], [-0.05, 0.95], [0.999, 0.001]] as const) {
      const [px, py] = toCanvas([p[0], p[1]], vp);
      const [x, y] = toWorkspace(px, py, vp);
      expect(Math.abs(x - p[0])).toBeLessThan(1e-12);
      expect(Math.abs(y - p[1])).toBeLessThan(1e-12);
    }
  });

  it("clamps out-of-area pointers to the workspace", () => {
    const [x, y] = toWorkspace(-50, 700, vp);
    expect(x).toBe(-1);
    expect(y).toBe(-1);
  });

  it("respects margins and non-square canvases", () => {
    const padded: Viewport = { width: 700, height: 500, margin: 10 };
    const [px, py] = toCanvas([0, 0], padded);
    expect(px).toBe(350);
    expect(py).toBe(250);
    const [x, y] = toWorkspace(px, py, padded);
    expect([x, y]).toEqual([0, 0]);
  });
});
