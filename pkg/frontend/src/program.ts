// Waypoint program editing: teach from the live configuration, reorder,
// delete, set limits. The document is validated before upload and invalid
// entries are reported per row so the UI can mark them inline.

import type { PrimitiveDoc, ProgramDoc, StateFrame } from "./types.js";

export interface ValidationIssue {
  index: number; // -1 for document-level problems
  field: string;
  message: string;
}

export class ProgramEditor {
  startQ: number[] | null = null;
  dt = 0.004;
  primitives: PrimitiveDoc[] = [];

  constructor(private nA: number) {}

  setStart(frame: StateFrame): void {
    this.startQ = [...frame.q_a];
  }

  /** Capture the live configuration as a joint waypoint. */
  teach(frame: StateFrame, vmax: number | number[] = 1.0, amax: number | number[] = 1.5): void {
    if (this.startQ === null) {
      this.setStart(frame);
    }
    this.primitives.push({
      kind: "MoveJ",
      target: { kind: "joint", q: [...frame.q_a] },
      vmax,
      amax,
    });
  }

  addCartesian(xyz: number[], quatWxyz: number[], vmax = 0.25, amax = 0.5): void {
    this.primitives.push({
      kind: "MoveL",
      target: { kind: "cartesian", xyz: [...xyz], quat_wxyz: [...quatWxyz] },
      vmax,
      amax,
    });
  }

  delete(index: number): void {
    this.primitives.splice(index, 1);
  }

  move(from: number, to: number): void {
    if (from < 0 || from >= this.primitives.length) return;
    const clamped = Math.max(0, Math.min(this.primitives.length - 1, to));
    const [item] = this.primitives.splice(from, 1);
    this.primitives.splice(clamped, 0, item);
  }

  setLimits(index: number, vmax: number | number[], amax: number | number[]): void {
    this.primitives[index].vmax = vmax;
    this.primitives[index].amax = amax;
  }

  validate(): ValidationIssue[] {
    const issues: ValidationIssue[] = [];
    if (this.startQ === null || this.startQ.length !== this.nA) {
      issues.push({ index: -1, field: "start_q", message: `start_q needs ${this.nA} joints` });
    }
    if (this.primitives.length === 0) {
      issues.push({ index: -1, field: "primitives", message: "program is empty" });
    }
    if (!(this.dt > 0)) {
      issues.push({ index: -1, field: "dt", message: "dt must be > 0" });
    }
    this.primitives.forEach((p, i) => {
      for (const [field, value] of [["vmax", p.vmax], ["amax", p.amax]] as const) {
        const values = Array.isArray(value) ? value : [value];
        if (values.length === 0 || values.some((v) => !(v > 0))) {
          issues.push({ index: i, field, message: `${field} must be positive` });
        }
        if (Array.isArray(value) && value.length !== this.nA) {
          issues.push({ index: i, field, message: `${field} needs 1 or ${this.nA} values` });
        }
      }
      if (p.kind === "MoveJ") {
        if (!p.target.q || p.target.q.length !== this.nA) {
          issues.push({ index: i, field: "target", message: `joint target needs ${this.nA} values` });
        }
      } else if (!p.target.xyz || p.target.xyz.length !== 3) {
        issues.push({ index: i, field: "target", message: "cartesian target needs xyz" });
      }
    });
    return issues;
  }

  document(): ProgramDoc {
    const issues = this.validate();
    if (issues.length) {
      const first = issues[0];
      throw new Error(`invalid program: [${first.index}] ${first.field}: ${first.message}`);
    }
    return {
      start_q: [...(this.startQ as number[])],
      primitives: this.primitives.map((p) => ({
        kind: p.kind,
        target: { ...p.target },
        vmax: p.vmax,
        amax: p.amax,
      })),
      dt: this.dt,
    };
  }
}
