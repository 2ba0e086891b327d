import { describe, expect, it } from "vitest";

import {
  absoluteError,
  formatCorrelation,
  formatTorque,
  kinematicsPanels,
  metricsTable,
  rmsByJoint,
  selectionTable,
  toPolylines,
  torqueAxis,
  torqueOverlay,
} from "../src/plots.js";
import type { PlotData, SizingReport } from "../src/types.js";

const PLOT: PlotData = {
  t: [0, 0.1, 0.2],
  demo: [
    [1, 2, 3],
    [10, 20, 30],
    [5, 5, 5],
    [0.01, 0.02, 0.01],
  ],
  pro: [
    [1, 2, 2.5],
    [11, 21, 29],
    [5, 6, 5],
    [0.01, 0.01, 0.01],
  ],
};

describe("torque panels", () => {
  it("assigns J1-J3 to the left axis and J4 to the right", () => {
    expect(torqueAxis(0, 4)).toBe("left");
    expect(torqueAxis(2, 4)).toBe("left");
    expect(torqueAxis(3, 4)).toBe("right");
  });

  it("overlays both paths per joint, fast path dashed", () => {
    const series = torqueOverlay(PLOT);
    expect(series).toHaveLength(8);
    const j4 = series.filter((s) => s.label.startsWith("J4"));
    expect(j4.every((s) => s.axis === "right")).toBe(true);
    expect(series.filter((s) => s.dash)).toHaveLength(4);
  });

  it("computes absolute error traces", () => {
    const err = absoluteError(PLOT);
    expect(err[0].values).toEqual([0, 0, 0.5]);
  });

  it("computes per-joint rms", () => {
    const rows = rmsByJoint(PLOT);
    expect(rows[2].demo).toBeCloseTo(5, 12);
    expect(rows).toHaveLength(4);
  });

  it("maps series into bounded pixel polylines", () => {
    const lines = toPolylines(torqueOverlay(PLOT), 100, 50, "left");
    expect(lines).toHaveLength(6);
    for (const line of lines) {
      for (const pair of line.points.split(" ")) {
        const [x, y] = pair.split(",").map(Number);
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThanOrEqual(100);
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(50);
      }
    }
  });
});

describe("kinematicsPanels", () => {
  it("splits the trajectory CSV into position/velocity/acceleration rows", () => {
    const csv = [
      "t,q1,q2,qd1,qd2,qdd1,qdd2",
      "0.0,0.1,0.2,0.0,0.0,1.0,2.0",
      "0.01,0.15,0.25,0.5,0.6,1.1,2.1",
    ].join("\n");
    const panels = kinematicsPanels(csv);
    expect(panels.position).toHaveLength(2);
    expect(panels.position[1].values).toEqual([0.2, 0.25]);
    expect(panels.velocity[0].values).toEqual([0.0, 0.5]);
    expect(panels.acceleration[1].values).toEqual([2.0, 2.1]);
    expect(panels.position[0].t).toEqual([0.0, 0.01]);
  });
});

describe("tables", () => {
  it("formats correlation to 4 decimals and torque to 3", () => {
    expect(formatCorrelation(0.99938)).toBe("0.9994");
    expect(formatCorrelation(null)).toBe("n/a");
    expect(formatTorque(2.7729)).toBe("2.773");
  });

  it("builds the metrics table rows", () => {
    const rows = metricsTable([
      { joint: "J2", correlation: 0.9994, rmse_Nm: 2.773, bias_Nm: -0.92 },
      { joint: "J4", correlation: null, rmse_Nm: 0.089, bias_Nm: -0.0 },
    ]);
    expect(rows[0]).toEqual({ joint: "J2", correlation: "0.9994", rmse: "2.773", bias: "-0.920" });
    expect(rows[1].correlation).toBe("n/a");
  });

  it("marks only changed selection cells", () => {
    const report: SizingReport = {
      requirements_round1: [],
      requirements_round2: [],
      round1: [
        { joint: "J1", motor: "AC_400W_2500", gearbox: "ZXS20_50", margins: {}, feasible: true, changed: false },
        { joint: "J2", motor: "AC_2_3kW_1500", gearbox: "ZXS40_100", margins: {}, feasible: true, changed: false },
      ],
      round2: [
        { joint: "J1", motor: "AC_600W_2500", gearbox: "ZXS20_100", margins: {}, feasible: true, changed: true },
        { joint: "J2", motor: "AC_2_3kW_1500", gearbox: "ZXS40_100", margins: {}, feasible: true, changed: false },
      ],
      iterations: 2,
    };
    const cells = selectionTable(report);
    expect(cells[0].changed).toBe(true);
    expect(cells[1].changed).toBe(false);
    expect(cells[0].round2).toBe("AC_600W_2500 + ZXS20_100");
  });
});
