// Browser entry: wires the panels (setup, jog pad, program editor, run
// launcher, results) to the engine client over HTTP + WebSocket.

import { EngineClient } from "./api.js";
import { EventStream } from "./events.js";
import { cartesianJog, JogController, jointJog } from "./jog.js";
import {
  kinematicsPanels,
  metricsTable,
  rmsByJoint,
  selectionTable,
  torqueOverlay,
  toPolylines,
} from "./plots.js";
import { ProgramEditor } from "./program.js";
import { skeletonSegments } from "./skeleton.js";
import { ViewState } from "./state.js";
import type { MetricsRow, PlotData, SizingReport, StateFrame } from "./types.js";

const base = `${location.protocol}//${location.host}`;
const client = new EngineClient(base, fetch.bind(window), true);
const view = new ViewState();
let editor: ProgramEditor | null = null;
let jog: JogController | null = null;
let stream: EventStream | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setBanner(text: string, bad = false): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = bad ? "banner bad" : "banner";
}

async function createSession(): Promise<void> {
  const kind = el<HTMLSelectElement>("robot-kind").value;
  const scale = parseFloat(el<HTMLInputElement>("scale").value);
  const payload = parseFloat(el<HTMLInputElement>("payload").value);
  const info = await client.createSession(kind, {
    scale,
    mass_exponent: 1.7,
    inertia_exponent: 3.7,
    payload_mass_kg: payload > 0 ? payload : null,
    payload_com_m: [0, 0, 0.1],
  });
  view.bindSession(info.session_id, info.n_a, info.reach_m);
  editor = new ProgramEditor(info.n_a);
  const frame = await client.state(info.session_id);
  view.setStateFrame(frame, 0);
  editor.setStart(frame);
  setBanner(`session ${info.session_id}: ${kind} reach ${info.reach_m.toFixed(3)} m`);

  stream?.close();
  const wsBase = base.replace(/^http/, "ws");
  stream = new EventStream(`${wsBase}/sessions/${info.session_id}/events`, (url) =>
    new WebSocket(url) as unknown as import("./events.js").WebSocketLike);
  stream.onEvent((ev) => view.apply(ev));
  stream.onStatus((ok) => setBanner(ok ? "connected" : "disconnected", !ok));
  stream.open();
  renderJogPad(info.n_a);
}

function renderJogPad(nA: number): void {
  const pad = el<HTMLDivElement>("jog-pad");
  pad.innerHTML = "";
  const hold = (label: string, command: () => ReturnType<typeof jointJog>) => {
    const button = document.createElement("button");
    button.textContent = label;
    button.onmousedown = () => {
      if (!view.sessionId) return;
      jog?.release();
      jog = new JogController(client, view.sessionId, 10);
      jog.press(command());
    };
    button.onmouseup = button.onmouseleave = () => jog?.release();
    pad.appendChild(button);
  };
  for (let axis = 0; axis < nA; axis++) {
    hold(`J${axis + 1} -`, () => jointJog(axis, -1));
    hold(`J${axis + 1} +`, () => jointJog(axis, +1));
  }
  for (const [label, dir] of [["x", [1, 0, 0]], ["y", [0, 1, 0]], ["z", [0, 0, 1]]] as const) {
    hold(`${label} -`, () => cartesianJog([...dir], -1));
    hold(`${label} +`, () => cartesianJog([...dir], +1));
  }
}

function renderLoop(): void {
  view.subscribe(() => {
    const frame = view.live;
    if (frame) {
      drawSkeleton(frame);
      el<HTMLDivElement>("joints").textContent = frame.q_a
        .map((q, i) => `J${i + 1}=${q.toFixed(3)}${frame.at_limit[i] ? " (limit)" : ""}`)
        .join("  ");
    }
    if (view.run) {
      el<HTMLDivElement>("run-status").textContent =
        `${view.run.runId}: ${view.run.status} ${view.run.stage}`;
      if (view.run.status === "done") void showResults(view.run.runId);
    }
    if (view.lastError) setBanner(view.lastError, true);
  });
}

function drawSkeleton(frame: StateFrame): void {
  const svg = el<HTMLElement>("skeleton");
  const cam = { azimuthRad: 0.7, elevationRad: 0.45, scale: 120, cx: 180, cy: 230 };
  const segments = skeletonSegments(frame, cam);
  svg.innerHTML = segments
    .map(
      (s) =>
        `<line x1="${s.x1.toFixed(1)}" y1="${s.y1.toFixed(1)}" x2="${s.x2.toFixed(1)}" ` +
        `y2="${s.y2.toFixed(1)}" stroke="#268" stroke-width="4" stroke-linecap="round"/>`,
    )
    .join("");
}

function renderProgram(): void {
  if (!editor) return;
  const list = el<HTMLOListElement>("program-list");
  list.innerHTML = "";
  editor.primitives.forEach((p, i) => {
    const li = document.createElement("li");
    const target = p.kind === "MoveJ"
      ? (p.target.q ?? []).map((v) => v.toFixed(2)).join(", ")
      : (p.target.xyz ?? []).map((v) => v.toFixed(3)).join(", ");
    li.textContent = `${p.kind} [${target}] `;
    for (const [label, action] of [
      ["up", () => editor?.move(i, i - 1)],
      ["down", () => editor?.move(i, i + 1)],
      ["delete", () => editor?.delete(i)],
    ] as const) {
      const button = document.createElement("button");
      button.textContent = label;
      button.onclick = () => {
        action();
        renderProgram();
      };
      li.appendChild(button);
    }
    list.appendChild(li);
  });
  const issues = editor.validate();
  el<HTMLDivElement>("program-issues").textContent = issues
    .map((v) => `[${v.index}] ${v.field}: ${v.message}`)
    .join("; ");
  el<HTMLButtonElement>("upload").disabled = issues.length > 0;
}

async function showResults(runId: string): Promise<void> {
  const plot = await client.artifact<PlotData>(runId, "plot_data");
  const sizing = await client.artifact<SizingReport>(runId, "sizing");
  const metricsCsv = await client.artifact<string>(runId, "metrics");
  const rows: MetricsRow[] = metricsCsv
    .trim()
    .split("\n")
    .slice(1)
    .map((line) => {
      const [joint, corr, rmse, bias] = line.split(",");
      return {
        joint,
        correlation: corr === "" ? null : parseFloat(corr),
        rmse_Nm: parseFloat(rmse),
        bias_Nm: parseFloat(bias),
      };
    });

  const trajectoryCsv = await client.artifact<string>(runId, "trajectory");
  const kin = kinematicsPanels(trajectoryCsv);
  for (const [id, series] of [["kin-pos", kin.position], ["kin-vel", kin.velocity],
                              ["kin-acc", kin.acceleration]] as const) {
    el<HTMLElement>(id).innerHTML = toPolylines(series, 640, 120, "left")
      .map((p) => `<polyline points="${p.points}" fill="none" stroke="#485"/>`)
      .join("");
  }

  const series = torqueOverlay(plot);
  const left = toPolylines(series, 640, 200, "left");
  const right = toPolylines(series, 640, 200, "right");
  el<HTMLElement>("torque-left").innerHTML = left
    .map((p) => `<polyline points="${p.points}" fill="none" stroke="#37c" ` +
      `${p.dash ? 'stroke-dasharray="6 4"' : ""}/>`)
    .join("");
  el<HTMLElement>("torque-right").innerHTML = right
    .map((p) => `<polyline points="${p.points}" fill="none" stroke="#c73" ` +
      `${p.dash ? 'stroke-dasharray="6 4"' : ""}/>`)
    .join("");

  el<HTMLElement>("rms-panel").innerHTML = rmsByJoint(plot)
    .map((r) => `<div>${r.joint}: DEMO ${r.demo.toFixed(2)} / PRO ${r.pro.toFixed(2)} Nm</div>`)
    .join("");

  el<HTMLElement>("metrics-table").innerHTML =
    "<tr><th>Joint</th><th>Correlation</th><th>RMSE [Nm]</th><th>Bias [Nm]</th></tr>" +
    metricsTable(rows)
      .map((r) => `<tr><td>${r.joint}</td><td>${r.correlation}</td><td>${r.rmse}</td><td>${r.bias}</td></tr>`)
      .join("");

  el<HTMLElement>("selection-table").innerHTML =
    "<tr><th>Joint</th><th>Round 1</th><th>Round 2</th></tr>" +
    selectionTable(sizing)
      .map((r) => `<tr><td>${r.joint}</td><td>${r.round1}</td>` +
        `<td class="${r.changed ? "changed" : ""}">${r.round2}</td></tr>`)
      .join("");
}

function wire(): void {
  el<HTMLButtonElement>("create").onclick = () => void createSession().catch((e) => setBanner(String(e), true));
  el<HTMLButtonElement>("teach").onclick = () => {
    if (editor && view.live) {
      editor.teach(view.live);
      renderProgram();
    }
  };
  el<HTMLButtonElement>("upload").onclick = () => {
    if (!editor || !view.sessionId) return;
    void client
      .uploadProgram(view.sessionId, editor.document())
      .then(() => setBanner("program uploaded"))
      .catch((e) => setBanner(String(e), true));
  };
  el<HTMLButtonElement>("run").onclick = () => {
    if (!view.sessionId) return;
    void client.startRun(view.sessionId).catch((e) => setBanner(String(e), true));
  };
  renderLoop();
}

window.addEventListener("load", wire);
