// Wire types of the engine's HTTP/WebSocket contract. All units SI except
// fields explicitly suffixed _rpm.

export interface ScenarioDoc {
  scale: number;
  mass_exponent?: number;
  inertia_exponent?: number;
  payload_mass_kg?: number | null;
  payload_com_m?: number[];
  payload_inertia_kgm2?: number[][];
  friction?: { viscous: number; coulomb: number }[];
}

export interface SessionInfo {
  session_id: string;
  n_a: number;
  reach_m: number;
}

export interface JointFrame {
  joint: string;
  xyz: number[];
  quat_wxyz: number[];
  parent_xyz: number[];
}

export interface StateFrame {
  q_a: number[];
  q_full: number[];
  tool_xyz: number[];
  tool_quat_wxyz: number[];
  at_limit: boolean[];
  frames: JointFrame[];
  results_valid: boolean;
  last_run_id: string | null;
}

export interface EngineEvent {
  seq: number;
  ts: number;
  type: string;
  payload: Record<string, unknown>;
}

export type JogCommand =
  | { mode: "joint"; axis: number; increment_rad: number }
  | { mode: "cartesian"; direction: number[]; increment_m: number };

export interface WaypointDoc {
  kind: "joint" | "cartesian";
  q?: number[];
  xyz?: number[];
  quat_wxyz?: number[];
}

export interface PrimitiveDoc {
  kind: "MoveJ" | "MoveL";
  target: WaypointDoc;
  vmax: number | number[];
  amax: number | number[];
}

export interface ProgramDoc {
  start_q: number[];
  primitives: PrimitiveDoc[];
  dt: number;
}

export interface RunStatus {
  run_id: string;
  session_id: string;
  status: "queued" | "running" | "done" | "failed";
  stage: string;
  error: string;
  artifacts: string[];
}

export interface MetricsRow {
  joint: string;
  correlation: number | null;
  rmse_Nm: number;
  bias_Nm: number;
}

export interface SelectionRow {
  joint: string;
  motor: string;
  gearbox: string;
  margins: Record<string, number | null>;
  feasible: boolean;
  changed: boolean;
}

export interface SizingReport {
  requirements_round1: RequirementRow[];
  requirements_round2: RequirementRow[];
  round1: SelectionRow[];
  round2: SelectionRow[];
  iterations: number;
}

export interface RequirementRow {
  peak_torque_Nm: number;
  rms_torque_Nm: number;
  peak_speed_radps: number;
  peak_speed_rpm: number;
}

export interface PlotData {
  t: number[];
  demo: number[][];
  pro: number[][];
}
