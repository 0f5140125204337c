// Wire schema spoken by the session service (see docs/wire-schema.md in the
// repository root). Versioned via the hello message.

export const SCHEMA_VERSION = 1;

export type Point = [number, number];

export interface WatermarkPolyline {
  label: string;
  points: Point[];
}

export interface HelloMsg {
  kind: "hello";
  schema: number;
  session: number;
  tick_ms: number;
  total_ticks: number;
  window_size: number;
  gamma: number;
  rate_cap: number;
  categories: string[];
  watermark: WatermarkPolyline[];
}

export interface StateMsg {
  kind: "state";
  session: number;
  t: number;
  robot: Point;
  human: Point | null;
  human_active: boolean;
  mixed: Point;
  nelbo: number;
  epochs: number;
  wall_ms: number;
  input_seq: number | null;
  robot_label: string | null;
  human_label: string | null;
  event?: number;
  c: number | null;
  p: number | null;
}

export interface EventMsg {
  kind: "event";
  session: number;
  t: number;
  event: string;
  seqs?: number[];
}

export interface ErrorMsg {
  kind: "error";
  session: number | null;
  message: string;
}

export interface ByeMsg {
  kind: "bye";
  session: number;
  reason: string;
}

export type ServerMsg = HelloMsg | StateMsg | EventMsg | ErrorMsg | ByeMsg;

export interface InputMsg {
  kind: "input";
  seq: number;
  x: number;
  y: number;
  active: boolean;
}

export function parseServerMsg(raw: string): ServerMsg | null {
  try {
    const msg = JSON.parse(raw) as ServerMsg;
    if (!msg || typeof msg !== "object" || !("kind" in msg)) return null;
    return msg;
  } catch {
    return null;
  }
}
