// Client-side session state: the latest configuration from the event
// stream (sequence-monotonic by construction of EventStream), run progress
// and error banners.

import type { EngineEvent, StateFrame } from "./types.js";

export interface RunProgress {
  runId: string;
  stage: string;
  status: "queued" | "running" | "done" | "failed";
  detail?: string;
}

export class ViewState {
  sessionId: string | null = null;
  nA = 0;
  reachM = 0;
  live: StateFrame | null = null;
  liveSeq = 0;
  run: RunProgress | null = null;
  lastError = "";

  private listeners = new Set<() => void>();

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  bindSession(sessionId: string, nA: number, reachM: number): void {
    this.sessionId = sessionId;
    this.nA = nA;
    this.reachM = reachM;
    this.notify();
  }

  setStateFrame(frame: StateFrame, seq: number): void {
    if (seq < this.liveSeq) return; // never render an older frame
    this.live = frame;
    this.liveSeq = seq;
    this.notify();
  }

  apply(event: EngineEvent): void {
    switch (event.type) {
      case "state":
        this.setStateFrame(event.payload as unknown as StateFrame, event.seq);
        break;
      case "error":
        this.lastError = String(event.payload["detail"] ?? "");
        this.notify();
        break;
      case "run_queued":
        this.run = { runId: String(event.payload["run_id"]), stage: "", status: "queued" };
        this.notify();
        break;
      case "run_started":
        this.run = { runId: String(event.payload["run_id"]), stage: "", status: "running" };
        this.notify();
        break;
      case "run_progress":
        if (this.run && this.run.runId === event.payload["run_id"]) {
          this.run.stage = String(event.payload["stage"]);
          this.notify();
        }
        break;
      case "run_complete":
        if (this.run && this.run.runId === event.payload["run_id"]) {
          this.run.status = "done";
          this.notify();
        }
        break;
      case "run_failed":
        if (this.run && this.run.runId === event.payload["run_id"]) {
          this.run.status = "failed";
          this.run.detail = String(event.payload["detail"] ?? "");
          this.notify();
        }
        break;
      default:
        break;
    }
  }
}
