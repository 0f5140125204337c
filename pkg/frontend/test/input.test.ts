import { describe, expect, it } from "vitest";
import { InputGate } from "../src/input.js";
import type { InputMsg } from "../src/protocol.js";

function harness(maxHz = 60) {
  const sent: InputMsg[] = [];
  let now = 0;
  const gate = new InputGate((m) => sent.push(m), () => now, maxHz);
  return { sent, gate, advance: (dt: number) => { now += dt; } };
}

describe("input gating", () => {
  it("caps a 120 Hz pointer flood at 60 Hz", () => {
    const { sent, gate, advance } = harness(60);
    for (let i = 0; i < 120; i++) {
      gate.pointer(i / 120, 0);
      advance(1 / 120); // one second of events at 120 Hz
    }
    expect(sent.length).toBeLessThanOrEqual(60);
    expect(sent.length).toBeGreaterThanOrEqual(59);
  });

  it("messages are inactive until the modifier is held", () => {
    const { sent, gate, advance } = harness();
    gate.pointer(0.1, 0.1);
    advance(0.05);
    gate.setModifier(true);
    advance(0.05);
    gate.pointer(0.2, 0.2);
    expect(sent.map((m) => m.active)).toEqual([false, true, true]);
  });

  it("release emits active=false immediately, bypassing the rate gate", () => {
    const { sent, gate } = harness();
    gate.pointer(0.3, 0.3);
    gate.setModifier(true); // immediate emission despite zero elapsed time
    gate.setModifier(false);
    expect(sent.length).toBe(3);
    expect(sent[sent.length - 1].active).toBe(false);
  });

  it("sequence numbers increase monotonically", () => {
    const { sent, gate, advance } = harness();
    for (let i = 0; i < 5; i++) {
      gate.pointer(0, 0);
      advance(0.1);
    }
    const seqs = sent.map((m) => m.seq);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(new Set(seqs).size).toBe(seqs.length);
  });

  it("normalized coordinates pass through untouched", () => {
    const { sent, gate } = harness();
    gate.pointer(-1, 1);
    expect(sent[0].x).toBe(-1);
    expect(sent[0].y).toBe(1);
  });
});
