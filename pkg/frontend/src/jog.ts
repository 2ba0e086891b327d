// Press-and-hold jogging: while a pad button is held, commands stream at a
// fixed cadence, capped at 20 Hz and never overlapping (the next command
// waits for the previous acknowledgement, so bursts cannot form).

import type { EngineClient } from "./api.js";
import type { JogCommand } from "./types.js";

export const MAX_RATE_HZ = 20;
export const JOINT_STEP_RAD = 0.01;
export const CART_STEP_M = 0.005;

export class JogController {
  commandsSent = 0;
  errors = 0;
  private holding = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private client: EngineClient,
    private sessionId: string,
    private rateHz: number = MAX_RATE_HZ,
    private onResult?: (ok: boolean) => void,
  ) {
    if (rateHz > MAX_RATE_HZ) {
      this.rateHz = MAX_RATE_HZ;
    }
  }

  get isHolding(): boolean {
    return this.holding;
  }

  press(command: JogCommand): void {
    if (this.holding) return;
    this.holding = true;
    const period = 1000 / this.rateHz;
    void this.tick(command);
    this.timer = setInterval(() => void this.tick(command), period);
  }

  release(): void {
    this.holding = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(command: JogCommand): Promise<void> {
    if (!this.holding || this.inFlight) return;
    this.inFlight = true;
    try {
      const res = await this.client.jog(this.sessionId, command);
      this.commandsSent += 1;
      if (!res.ok) this.errors += 1;
      this.onResult?.(res.ok);
    } catch {
      this.errors += 1;
      this.onResult?.(false);
    } finally {
      this.inFlight = false;
    }
  }
}

export function jointJog(axis: number, sign: 1 | -1, step = JOINT_STEP_RAD): JogCommand {
  return { mode: "joint", axis, increment_rad: sign * step };
}

export function cartesianJog(direction: number[], sign: 1 | -1, step = CART_STEP_M): JogCommand {
  return { mode: "cartesian", direction, increment_m: sign * step };
}
