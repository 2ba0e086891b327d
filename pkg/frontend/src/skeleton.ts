// Wireframe view of the manipulator: joint frames from the state stream
// projected by a simple orbit camera onto 2D line segments. No mesh assets.

import type { StateFrame } from "./types.js";

export interface Segment2D {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  joint: string;
}

export interface Camera {
  azimuthRad: number;
  elevationRad: number;
  scale: number; // px per meter
  cx: number;
  cy: number;
}

export function project(p: number[], cam: Camera): [number, number] {
  const ca = Math.cos(cam.azimuthRad);
  const sa = Math.sin(cam.azimuthRad);
  const ce = Math.cos(cam.elevationRad);
  const se = Math.sin(cam.elevationRad);
  const u = -sa * p[0] + ca * p[1];
  const v = -ca * se * p[0] - sa * se * p[1] + ce * p[2];
  return [cam.cx + cam.scale * u, cam.cy - cam.scale * v];
}

/** Line segments from each joint's parent anchor to the joint origin, plus
 * the tool marker segment. */
export function skeletonSegments(frame: StateFrame, cam: Camera): Segment2D[] {
  const out: Segment2D[] = [];
  for (const jf of frame.frames) {
    const [x1, y1] = project(jf.parent_xyz, cam);
    const [x2, y2] = project(jf.xyz, cam);
    out.push({ x1, y1, x2, y2, joint: jf.joint });
  }
  if (frame.frames.length) {
    const last = frame.frames[frame.frames.length - 1];
    const [x1, y1] = project(last.xyz, cam);
    const [x2, y2] = project(frame.tool_xyz, cam);
    out.push({ x1, y1, x2, y2, joint: "tool" });
  }
  return out;
}
