// WebSocket client with reconnect. Network callbacks only mutate the view
// state through the reducer; the caller re-renders on animation frames.

import type { InputMsg, ServerMsg } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";

export interface ClientHandlers {
  onMessage(msg: ServerMsg): void;
  onOpen(): void;
  onClose(): void;
}

export class SessionClient {
  private ws: WebSocket | null = null;
  private closedByUser = false;

  constructor(
    private readonly url: string,
    private readonly handlers: ClientHandlers,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => this.handlers.onOpen();
    this.ws.onclose = () => {
      this.ws = null;
      if (!this.closedByUser) this.handlers.onClose();
    };
    this.ws.onmessage = (ev) => {
      const msg = parseServerMsg(String(ev.data));
      if (msg) this.handlers.onMessage(msg);
    };
  }

  send(msg: InputMsg): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}
