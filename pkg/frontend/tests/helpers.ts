// Spawns a fresh engine process for integration tests.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface Engine {
  baseUrl: string;
  wsUrl: string;
  stop: () => Promise<void>;
}

let nextPort = 18400 + Math.floor(Math.random() * 400);

export async function startEngine(): Promise<Engine> {
  const port = nextPort++;
  const runsDir = mkdtempSync(join(tmpdir(), "armsizer-ui-"));
  const child: ChildProcess = spawn(
    "python3",
    ["-m", "armsizer.cli", "serve", "--host", "127.0.0.1", "--port", String(port),
     "--runs", runsDir],
    { cwd: join(__dirname, "..", ".."), stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => (stderr += String(chunk)));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`engine exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const res = await fetch(`${baseUrl}/openapi.json`);
      if (res.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`engine did not come up on ${baseUrl}: ${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  return {
    baseUrl,
    wsUrl: baseUrl.replace("http", "ws"),
    stop: () =>
      new Promise((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => {
          child.kill("SIGKILL");
          resolve();
        }, 3000).unref();
      }),
  };
}

export const BENCH_SCENARIO = {
  scale: 1.6,
  mass_exponent: 1.7,
  inertia_exponent: 3.7,
  payload_mass_kg: 10.0,
  payload_com_m: [0, 0, 0.1],
  payload_inertia_kgm2: [
    [0.0547, 0, 0],
    [0, 0.0963, 0],
    [0, 0, 0.1083],
  ],
  friction: [
    { viscous: 0.019, coulomb: 0.08 },
    { viscous: 0.015, coulomb: 0.1 },
    { viscous: 0.016, coulomb: 0.15 },
    { viscous: 0.002, coulomb: 0.03 },
  ],
};
