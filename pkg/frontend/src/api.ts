// Typed client for the engine. Every mutating call can be recorded so a
// whole UI session is replayable against a fresh engine byte-for-byte.

import type {
  EngineEvent,
  JogCommand,
  ProgramDoc,
  RunStatus,
  ScenarioDoc,
  SessionInfo,
  StateFrame,
} from "./types.js";

export interface TranscriptEntry {
  method: "POST" | "PUT" | "GET";
  path: string;
  body?: unknown;
}

export class EngineError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class EngineClient {
  readonly transcript: TranscriptEntry[] = [];

  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = fetch,
    private record = false,
  ) {}

  private async request<T>(method: "POST" | "PUT" | "GET", path: string, body?: unknown): Promise<T> {
    if (this.record && method !== "GET") {
      this.transcript.push({ method, path, body });
    }
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      const text = await res.text();
      throw new EngineError(res.status, `${method} ${path} -> ${res.status}: ${text}`);
    }
    const type = res.headers.get("content-type") ?? "";
    if (type.includes("application/json")) {
      return (await res.json()) as T;
    }
    return (await res.text()) as unknown as T;
  }

  createSession(robotKind: string, scenario: ScenarioDoc): Promise<SessionInfo> {
    return this.request("POST", "/sessions", { robot_kind: robotKind, scenario });
  }

  state(sessionId: string): Promise<StateFrame> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  jog(sessionId: string, command: JogCommand): Promise<{ ok: boolean; state: StateFrame }> {
    return this.request("POST", `/sessions/${sessionId}/jog`, command);
  }

  uploadProgram(sessionId: string, program: ProgramDoc): Promise<{ ok: boolean }> {
    return this.request("PUT", `/sessions/${sessionId}/program`, program);
  }

  startRun(sessionId: string): Promise<{ run_id: string }> {
    return this.request("POST", `/sessions/${sessionId}/runs`);
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request("GET", `/runs/${runId}`);
  }

  artifact<T = string>(runId: string, kind: string): Promise<T> {
    return this.request("GET", `/runs/${runId}/artifacts/${kind}`);
  }

  async waitForRun(runId: string, timeoutMs = 300_000, pollMs = 250): Promise<RunStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.runStatus(runId);
      if (status.status === "done" || status.status === "failed") return status;
      if (Date.now() > deadline) throw new Error(`run ${runId} timed out`);
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  /** Replay a recorded transcript in order; returns the responses. */
  static async replay(
    transcript: TranscriptEntry[],
    baseUrl: string,
    fetchImpl: FetchLike = fetch,
  ): Promise<unknown[]> {
    const client = new EngineClient(baseUrl, fetchImpl, false);
    const out: unknown[] = [];
    let lastRunId: string | null = null;
    for (const entry of transcript) {
      const res = await client.request<Record<string, unknown>>(entry.method, entry.path, entry.body);
      out.push(res);
      if (entry.path.endsWith("/runs") && res && typeof res === "object" && "run_id" in res) {
        lastRunId = res["run_id"] as string;
        await client.waitForRun(lastRunId);
      }
    }
    return out;
  }
}
