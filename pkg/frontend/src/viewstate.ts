// Pure view-model: server messages fold into a ViewState; rendering reads it
// on animation frames. Replaying the same messages reconstructs the same
// view, so a reconnect mid-session loses nothing.

import type { HelloMsg, Point, ServerMsg, StateMsg } from "./protocol.js";

export const TRAIL_CAP = 72;
export const CHART_WINDOW = 300;

export type Phase = "idle" | "running" | "finished";
export type Connection = "connecting" | "open" | "closed";

export interface SeriesPoint {
  t: number;
  value: number;
}

export interface ViewState {
  connection: Connection;
  phase: Phase;
  hello: HelloMsg | null;
  lastT: number;
  effector: Point | null;
  robot: Point | null;
  humanActive: boolean;
  trail: Point[];
  nelbo: SeriesPoint[];
  congruence: SeriesPoint[];
  robotLabel: string | null;
  humanLabel: string | null;
  lastError: string | null;
  states: StateMsg[]; // full log, downloadable post-session
}

export function initialViewState(): ViewState {
  return {
    connection: "connecting",
    phase: "idle",
    hello: null,
    lastT: 0,
    effector: null,
    robot: null,
    humanActive: false,
    trail: [],
    nelbo: [],
    congruence: [],
    robotLabel: null,
    humanLabel: null,
    lastError: null,
    states: [],
  };
}

function pushCapped<T>(arr: T[], item: T, cap: number): T[] {
  const out = arr.length >= cap ? arr.slice(arr.length - cap + 1) : arr.slice();
  out.push(item);
  return out;
}

export function applyMessage(vs: ViewState, msg: ServerMsg): ViewState {
  switch (msg.kind) {
    case "hello":
      return {
        ...initialViewState(),
        connection: vs.connection,
        phase: "running",
        hello: msg,
      };
    case "state": {
      const next: ViewState = {
        ...vs,
        lastT: msg.t,
        effector: msg.mixed,
        robot: msg.robot,
        humanActive: msg.human_active,
        trail: pushCapped(vs.trail, msg.mixed, TRAIL_CAP),
        nelbo: pushCapped(vs.nelbo, { t: msg.t, value: msg.nelbo }, CHART_WINDOW),
        robotLabel: msg.robot_label,
        humanLabel: msg.human_label,
        states: [...vs.states, msg],
      };
      if (msg.p !== null && msg.p !== undefined) {
        next.congruence = pushCapped(
          vs.congruence, { t: msg.t, value: msg.p }, CHART_WINDOW,
        );
      }
      return next;
    }
    case "bye":
      return { ...vs, phase: "finished" };
    case "error":
      return { ...vs, lastError: msg.message };
    case "event":
      return vs;
  }
}

export function setConnection(vs: ViewState, connection: Connection): ViewState {
  return { ...vs, connection };
}

// Session log CSV in the exact schema the analysis tooling reads.
export function statesToCsv(states: StateMsg[]): string {
  const header = "t,human_x,human_y,human_active,robot_x,robot_y,mixed_x,mixed_y,nelbo,epochs,wall_ms";
  const lines = states.map((s) => {
    const hx = s.human === null ? "" : String(s.human[0]);
    const hy = s.human === null ? "" : String(s.human[1]);
    return [
      s.t, hx, hy, s.human_active ? 1 : 0,
      s.robot[0], s.robot[1], s.mixed[0], s.mixed[1],
      s.nelbo, s.epochs, s.wall_ms,
    ].join(",");
  });
  return [header, ...lines].join("\n") + "\n";
}
