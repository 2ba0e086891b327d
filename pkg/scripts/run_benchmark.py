"""Run the bundled palletizing benchmark end to end and write all artifacts.

Usage: python scripts/run_benchmark.py [outdir]

Prints the extracted requirements, the DEMO/PRO agreement metrics and the
two-round selection, then writes the full artifact set (trajectory CSV,
torque CSVs, metrics CSV, sizing JSON, run manifest) to the output
directory (default: ./benchmark_run).
"""

from __future__ import annotations

import sys
import time

import numpy as np

from armsizer.analysis import metrics_to_csv
from armsizer.fixtures import (
    benchmark_program,
    benchmark_scenario,
    load_benchmark_catalog_document,
    scenario_model,
)
from armsizer.pipeline import run_pipeline, write_artifacts
from armsizer.sizing import SizingConfig, load_catalog


def main() -> int:
    outdir = sys.argv[1] if len(sys.argv) > 1 else "benchmark_run"
    scenario = benchmark_scenario()
    model = scenario_model(scenario)
    start_q, primitives, dt = benchmark_program(model)
    catalog = load_catalog(load_benchmark_catalog_document())

    t0 = time.perf_counter()
    result = run_pipeline(model, scenario, start_q, primitives, dt, catalog, SizingConfig(),
                          progress=lambda s: print(f"[{time.perf_counter()-t0:6.1f}s] {s}"))

    traj = result.trajectory
    print(f"\ncycle: {traj.duration:.3f} s, {len(traj.t)} samples at dt = {traj.dt*1e3:.1f} ms")
    print("peak joint speeds [rad/s]:", np.round(np.max(np.abs(traj.qd_a), axis=0), 4))

    print("\nrequirements (round 1):")
    for s, r in zip(result.round1.joints, result.round1.requirements):
        print(f"  {s.joint}: peak {r.peak_torque:8.3f} Nm  rms {r.rms_torque:8.3f} Nm  "
              f"speed {r.peak_speed:.3f} rad/s ({r.peak_speed_rpm:.3f} rpm)")

    print("\nfast-path agreement (DEMO vs PRO):")
    print(metrics_to_csv(result.metrics), end="")

    print("\nselection:")
    print(f"  {'joint':<6} {'round 1':<28} {'round 2':<28}")
    for s1, s2 in zip(result.round1.joints, result.round2.joints):
        mark = "  *changed*" if s2.changed else ""
        print(f"  {s1.joint:<6} {s1.motor + ' + ' + s1.gearbox:<28} "
              f"{s2.motor + ' + ' + s2.gearbox:<28}{mark}")
    print(f"  fixed point in {result.round2.iterations} iterations")

    files = write_artifacts(result, outdir, model, scenario, start_q, primitives, dt)
    print(f"\nartifacts written to {outdir}/: {', '.join(sorted(files.values()))}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
