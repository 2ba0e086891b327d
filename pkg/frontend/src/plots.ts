// Result-view assembly: torque overlay with the dual-axis convention
// (J1..J3 on the left axis, J4 on the right), absolute-error and per-joint
// RMS panels, the metrics table (4 decimals for correlation, 3 for
// rmse/bias) and the two-column selection table with changed cells marked.

import type { MetricsRow, PlotData, SelectionRow, SizingReport } from "./types.js";

export interface Series {
  label: string;
  axis: "left" | "right";
  t: number[];
  values: number[];
  dash: boolean; // fast path drawn dashed over the reference
}

export function torqueAxis(jointIndex: number, jointCount: number): "left" | "right" {
  // the wrist trace is orders of magnitude smaller; it gets its own axis
  return jointIndex === jointCount - 1 ? "right" : "left";
}

export function torqueOverlay(plot: PlotData): Series[] {
  const n = plot.pro.length;
  const series: Series[] = [];
  for (let j = 0; j < n; j++) {
    series.push({ label: `J${j + 1} PRO`, axis: torqueAxis(j, n), t: plot.t, values: plot.pro[j], dash: false });
    series.push({ label: `J${j + 1} DEMO`, axis: torqueAxis(j, n), t: plot.t, values: plot.demo[j], dash: true });
  }
  return series;
}

export function absoluteError(plot: PlotData): Series[] {
  return plot.pro.map((p, j) => ({
    label: `J${j + 1} |DEMO-PRO|`,
    axis: torqueAxis(j, plot.pro.length),
    t: plot.t,
    values: p.map((v, k) => Math.abs(plot.demo[j][k] - v)),
    dash: false,
  }));
}

export function rmsByJoint(plot: PlotData): { joint: string; demo: number; pro: number }[] {
  const rms = (xs: number[]) => Math.sqrt(xs.reduce((a, v) => a + v * v, 0) / xs.length);
  return plot.pro.map((p, j) => ({
    joint: `J${j + 1}`,
    demo: rms(plot.demo[j]),
    pro: rms(p),
  }));
}

export function formatCorrelation(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(4);
}

export function formatTorque(value: number): string {
  return value.toFixed(3);
}

export interface MetricsCell {
  joint: string;
  correlation: string;
  rmse: string;
  bias: string;
}

export function metricsTable(rows: MetricsRow[]): MetricsCell[] {
  return rows.map((r) => ({
    joint: r.joint,
    correlation: formatCorrelation(r.correlation),
    rmse: formatTorque(r.rmse_Nm),
    bias: formatTorque(r.bias_Nm),
  }));
}

export interface SelectionCell {
  joint: string;
  round1: string;
  round2: string;
  changed: boolean;
}

export function selectionTable(report: SizingReport): SelectionCell[] {
  const fmt = (s: SelectionRow) => `${s.motor} + ${s.gearbox}`;
  return report.round1.map((r1, i) => {
    const r2 = report.round2[i];
    return {
      joint: r1.joint,
      round1: fmt(r1),
      round2: fmt(r2),
      changed: r2.changed || fmt(r1) !== fmt(r2),
    };
  });
}

export interface KinematicsPanels {
  position: Series[];
  velocity: Series[];
  acceleration: Series[];
}

/** Parse the trajectory CSV (t,q1..qn,qd1..,qdd1..) into the three
 * kinematics rows of the results view. */
export function kinematicsPanels(trajectoryCsv: string): KinematicsPanels {
  const lines = trajectoryCsv.trim().split("\n");
  const header = lines[0].split(",");
  const n = (header.length - 1) / 3;
  const rows = lines.slice(1).map((line) => line.split(",").map(Number));
  const t = rows.map((r) => r[0]);
  const block = (offset: number, tag: string): Series[] =>
    Array.from({ length: n }, (_, j) => ({
      label: `J${j + 1} ${tag}`,
      axis: "left" as const,
      t,
      values: rows.map((r) => r[1 + offset * n + j]),
      dash: false,
    }));
  return {
    position: block(0, "q"),
    velocity: block(1, "qd"),
    acceleration: block(2, "qdd"),
  };
}

export interface Polyline {
  points: string; // "x1,y1 x2,y2 ..." in pixel coordinates
  dash: boolean;
  label: string;
}

/** Map series into SVG polyline point strings for one panel. */
export function toPolylines(
  series: Series[],
  width: number,
  height: number,
  axis: "left" | "right",
): Polyline[] {
  const selected = series.filter((s) => s.axis === axis);
  if (!selected.length) return [];
  const tMin = Math.min(...selected.map((s) => s.t[0]));
  const tMax = Math.max(...selected.map((s) => s.t[s.t.length - 1]));
  let vMin = Infinity;
  let vMax = -Infinity;
  for (const s of selected) {
    for (const v of s.values) {
      if (v < vMin) vMin = v;
      if (v > vMax) vMax = v;
    }
  }
  if (vMax === vMin) {
    vMax += 1;
    vMin -= 1;
  }
  const sx = (t: number) => ((t - tMin) / (tMax - tMin || 1)) * width;
  const sy = (v: number) => height - ((v - vMin) / (vMax - vMin)) * height;
  return selected.map((s) => ({
    label: s.label,
    dash: s.dash,
    points: s.t.map((t, k) => `${sx(t).toFixed(1)},${sy(s.values[k]).toFixed(1)}`).join(" "),
  }));
}
