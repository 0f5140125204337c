// Pointer capture and gating: input messages carry normalized coordinates,
// are active only while the modifier key is held, and leave the client at no
// more than `maxHz` messages per second. Releasing the modifier emits an
// active=false message immediately (bypassing the rate gate) so the server
// never keeps acting on stale pressure.

import type { InputMsg } from "./protocol.js";

export type SendFn = (msg: InputMsg) => void;
export type Clock = () => number; // seconds

export class InputGate {
  private seq = 0;
  private lastSent = -Infinity;
  private active = false;
  private lastPos: [number, number] | null = null;
  private readonly minInterval: number;

  constructor(
    private readonly send: SendFn,
    private readonly now: Clock,
    maxHz = 60,
  ) {
    this.minInterval = 1 / maxHz;
  }

  get sentCount(): number {
    return this.seq;
  }

  private emit(x: number, y: number, active: boolean): void {
    this.seq += 1;
    this.lastSent = this.now();
    this.send({ kind: "input", seq: this.seq, x, y, active });
  }

  pointer(x: number, y: number): void {
    this.lastPos = [x, y];
    // tiny tolerance so clock jitter at exactly maxHz does not halve the rate
    if (this.now() - this.lastSent < this.minInterval - 1e-9) return;
    this.emit(x, y, this.active);
  }

  setModifier(held: boolean): void {
    if (held === this.active) return;
    this.active = held;
    if (this.lastPos === null) return;
    // state changes always go out right away
    this.emit(this.lastPos[0], this.lastPos[1], held);
  }
}
