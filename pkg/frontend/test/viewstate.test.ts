import { describe, expect, it } from "vitest";
import type { HelloMsg, ServerMsg, StateMsg } from "../src/protocol.js";
import {
  applyMessage,
  initialViewState,
  statesToCsv,
  TRAIL_CAP,
  type ViewState,
} from "../src/viewstate.js";

const hello: HelloMsg = {
  kind: "hello", schema: 1, session: 1, tick_ms: 100, total_ticks: 2000,
  window_size: 15, gamma: 0.9, rate_cap: 0.2, categories: ["A"],
  watermark: [],
};

function stateMsg(t: number, extra: Partial<StateMsg> = {}): StateMsg {
  return {
    kind: "state", session: 1, t,
    robot: [0.1, 0.2], human: null, human_active: false,
    mixed: [t / 1000, -t / 1000], nelbo: 1 / t, epochs: 3, wall_ms: 5,
    input_seq: null, robot_label: null, human_label: null, c: null, p: null,
    ...extra,
  };
}

function replay(messages: ServerMsg[]): ViewState {
  return messages.reduce(applyMessage, initialViewState());
}

describe("view state reducer", () => {
  it("starts running on hello", () => {
    const vs = replay([hello]);
    expect(vs.phase).toBe("running");
    expect(vs.hello?.total_ticks).toBe(2000);
  });

  it("caps the trail at the last 72 positions", () => {
    const msgs: ServerMsg[] = [hello];
    for (let t = 1; t <= 80; t++) msgs.push(stateMsg(t));
    const vs = replay(msgs);
    expect(vs.trail.length).toBe(TRAIL_CAP);
    expect(vs.trail[0]).toEqual([9 / 1000, -9 / 1000]); // ticks 9..80 survive
    expect(vs.effector).toEqual([80 / 1000, -80 / 1000]);
  });

  it("keeps the congruence series only when P is defined", () => {
    const vs = replay([
      hello,
      stateMsg(1),
      stateMsg(2, { p: 0.5 }),
      stateMsg(3, { p: 0.7 }),
    ]);
    expect(vs.congruence.map((s) => s.value)).toEqual([0.5, 0.7]);
    expect(vs.nelbo.length).toBe(3);
  });

  it("is a pure function of the message sequence (reconnect replay)", () => {
    const msgs: ServerMsg[] = [hello];
    for (let t = 1; t <= 40; t++) msgs.push(stateMsg(t, { p: t / 100 }));
    const a = replay(msgs);
    const b = replay(msgs);
    expect(b).toEqual(a);
  });

  it("finishes on bye and records errors", () => {
    const vs = replay([
      hello, stateMsg(1),
      { kind: "bye", session: 1, reason: "finished" },
      { kind: "error", session: 1, message: "late input" },
    ]);
    expect(vs.phase).toBe("finished");
    expect(vs.lastError).toBe("late input");
  });

  it("serializes the full state log as session CSV", () => {
    const vs = replay([hello, stateMsg(1), stateMsg(2, {
      human: [0.5, -0.5], human_active: true,
    })]);
    const csv = statesToCsv(vs.states);
    const lines = csv.trimEnd().split("\n");
    expect(lines[0]).toBe(
      "t,human_x,human_y,human_active,robot_x,robot_y,mixed_x,mixed_y,nelbo,epochs,wall_ms",
    );
    expect(lines.length).toBe(3);
    expect(lines[2].startsWith("2,0.5,-0.5,1,")).toBe(true);
  });
});
