// Ordered event stream over the engine's WebSocket. Consumers get every
// event exactly once and in seq order; a detected gap triggers an automatic
// reconnect with ?since=<last seq> instead of silently rendering stale data.

import type { EngineEvent } from "./types.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export class EventStream {
  lastSeq = 0;
  gapsDetected = 0;
  reconnects = 0;
  connected = false;

  private socket: WebSocketLike | null = null;
  private listeners = new Set<(ev: EngineEvent) => void>();
  private statusListeners = new Set<(connected: boolean) => void>();
  private closedByUser = false;

  constructor(
    private wsUrl: string,
    private makeSocket: WebSocketFactory,
  ) {}

  onEvent(fn: (ev: EngineEvent) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  onStatus(fn: (connected: boolean) => void): () => void {
    this.statusListeners.add(fn);
    return () => this.statusListeners.delete(fn);
  }

  open(): void {
    this.closedByUser = false;
    this.connect();
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
    this.setConnected(false);
  }

  private setConnected(value: boolean): void {
    if (this.connected !== value) {
      this.connected = value;
      for (const fn of this.statusListeners) fn(value);
    }
  }

  private connect(): void {
    const url = `${this.wsUrl}?since=${this.lastSeq}`;
    const socket = this.makeSocket(url);
    this.socket = socket;
    socket.onopen = () => this.setConnected(true);
    socket.onmessage = (msg) => {
      const event = JSON.parse(String(msg.data)) as EngineEvent;
      if (event.seq <= this.lastSeq) {
        return; // duplicate from the resync backlog
      }
      if (event.seq !== this.lastSeq + 1 && this.lastSeq !== 0) {
        this.gapsDetected += 1;
        this.resync();
        return;
      }
      this.lastSeq = event.seq;
      for (const fn of this.listeners) fn(event);
    };
    socket.onclose = () => {
      this.setConnected(false);
      if (!this.closedByUser) {
        this.reconnects += 1;
        setTimeout(() => this.connect(), 200);
      }
    };
    socket.onerror = () => {
      /* onclose follows */
    };
  }

  /** Reconnect and ask the engine to resend everything after lastSeq. */
  private resync(): void {
    this.reconnects += 1;
    const old = this.socket;
    this.socket = null;
    if (old) {
      old.onclose = null;
      old.close();
    }
    this.connect();
  }
}
