// WebSocket session client. A reconnect creates a fresh CommandSource so the
// sequence numbers restart with the new connection.

import { CommandSource } from "./input.js";
import type { ViewStore } from "./state.js";
import type { ClientMessage } from "./wire.js";
import { assertValidMessage } from "./wire.js";

export class SessionClient {
  ws: WebSocket | null = null;
  source = new CommandSource();

  constructor(
    readonly url: string,
    readonly store: ViewStore,
    readonly now: () => number = () => Date.now(),
  ) {}

  connect(): void {
    this.store.connection = "connecting";
    this.source = new CommandSource();
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onmessage = (ev) => {
      try {
        this.store.applyServerMessage(JSON.parse(ev.data as string), this.now());
      } catch {
        this.store.rejectedMessages += 1;
      }
    };
    ws.onclose = () => {
      this.store.setDisconnected();
      setTimeout(() => this.connect(), 1000);
    };
    ws.onerror = () => ws.close();
  }

  send(msg: ClientMessage): void {
    assertValidMessage(msg);
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }
}
