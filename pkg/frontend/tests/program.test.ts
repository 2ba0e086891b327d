import { describe, expect, it } from "vitest";

import { ProgramEditor } from "../src/program.js";
import type { StateFrame } from "../src/types.js";

function frame(q: number[]): StateFrame {
  return {
    q_a: q,
    q_full: [...q, 0, 0],
    tool_xyz: [1, 0, 0.5],
    tool_quat_wxyz: [1, 0, 0, 0],
    at_limit: q.map(() => false),
    frames: [],
    results_valid: false,
    last_run_id: null,
  };
}

describe("ProgramEditor", () => {
  it("teach captures the live joint configuration", () => {
    const editor = new ProgramEditor(4);
    editor.teach(frame([0.1, 0.2, -0.3, 0.0]));
    expect(editor.primitives).toHaveLength(1);
    expect(editor.primitives[0].target.q).toEqual([0.1, 0.2, -0.3, 0.0]);
    expect(editor.startQ).toEqual([0.1, 0.2, -0.3, 0.0]);
  });

  it("reorder preserves the set and changes the order", () => {
    const editor = new ProgramEditor(4);
    for (const q of [[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]) editor.teach(frame(q));
    editor.move(2, 0);
    expect(editor.primitives.map((p) => p.target.q?.[0])).toEqual([2, 0, 1]);
    editor.move(0, 5); // clamped to the end
    expect(editor.primitives.map((p) => p.target.q?.[0])).toEqual([0, 1, 2]);
  });

  it("delete removes one row", () => {
    const editor = new ProgramEditor(4);
    editor.teach(frame([0, 0, 0, 0]));
    editor.teach(frame([1, 0, 0, 0]));
    editor.delete(0);
    expect(editor.primitives).toHaveLength(1);
    expect(editor.primitives[0].target.q?.[0]).toBe(1);
  });

  it("zero vmax blocks the document", () => {
    const editor = new ProgramEditor(4);
    editor.teach(frame([0, 0, 0, 0]));
    editor.setLimits(0, 0.0, 1.0);
    const issues = editor.validate();
    expect(issues.some((v) => v.field === "vmax" && v.index === 0)).toBe(true);
    expect(() => editor.document()).toThrow(/vmax/);
  });

  it("empty program is invalid", () => {
    const editor = new ProgramEditor(4);
    expect(editor.validate().some((v) => v.field === "primitives")).toBe(true);
  });

  it("valid program serializes with start_q and dt", () => {
    const editor = new ProgramEditor(4);
    editor.teach(frame([0.1, 0.2, 0.3, 0.0]), [1.2, 1.2, 1.0, 0.8], 1.5);
    editor.dt = 0.01;
    const doc = editor.document();
    expect(doc.start_q).toHaveLength(4);
    expect(doc.dt).toBe(0.01);
    expect(doc.primitives[0].vmax).toEqual([1.2, 1.2, 1.0, 0.8]);
  });
});
