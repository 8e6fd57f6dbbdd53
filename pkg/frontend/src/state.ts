// Client-side view model: the latest validated server state, connection
// status, the error-norm history ring, and the input mode. The store never
// feeds anything back into the simulation; it is a pure view of server truth.

import { validateMessage, type StateMessage } from "./wire.js";
import type { Vec3 } from "./vec.js";

export const STALE_AFTER_MS = 1000;
export const HISTORY_SECONDS = 30;
const HISTORY_CAPACITY = HISTORY_SECONDS * 20; // 20 Hz stream

export type ConnectionStatus = "connecting" | "connected" | "disconnected";
export type InputMode = "drag-sphere" | "pose-emulation";

export interface HistorySample {
  t: number;
  errorNorm: number;
}

/** Fixed-capacity ring of (t, error_norm) samples covering the last 30 s. */
export class ErrorHistory {
  private buf: HistorySample[] = [];

  push(t: number, errorNorm: number): void {
    this.buf.push({ t, errorNorm });
    if (this.buf.length > HISTORY_CAPACITY) {
      this.buf.shift();
    }
    const cutoff = t - HISTORY_SECONDS;
    while (this.buf.length && this.buf[0]!.t < cutoff) {
      this.buf.shift();
    }
  }

  samples(): readonly HistorySample[] {
    return this.buf;
  }
}

export class ViewStore {
  connection: ConnectionStatus = "connecting";
  inputMode: InputMode = "drag-sphere";
  lastState: StateMessage | null = null;
  lastReceiptMs = -Infinity;
  commandPreview: Vec3 = [0, 0, 0];
  history = new ErrorHistory();
  rejectedMessages = 0;

  /** Apply a raw server message; invalid payloads are counted and dropped. */
  applyServerMessage(raw: unknown, nowMs: number): boolean {
    if (!validateMessage(raw) || (raw as { type: string }).type !== "state") {
      this.rejectedMessages += 1;
      return false;
    }
    const msg = raw as StateMessage;
    this.lastState = msg;
    this.lastReceiptMs = nowMs;
    this.connection = "connected";
    this.history.push(msg.t, msg.error_norm);
    return true;
  }

  setDisconnected(): void {
    this.connection = "disconnected";
  }

  /** Stale state (no message for over a second) shows the banner. */
  isStale(nowMs: number): boolean {
    return nowMs - this.lastReceiptMs > STALE_AFTER_MS;
  }

  /** Seconds remaining in the current trial, given the trial period. */
  trialCountdown(periodS: number): number | null {
    if (!this.lastState) {
      return null;
    }
    const tInTrial = this.lastState.t % periodS;
    return periodS - tInTrial;
  }
}
