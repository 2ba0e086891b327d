"""Margin report for the bundled benchmark catalog.

Runs the benchmark cycle, extracts requirements with and without the
candidate actuator masses mounted, and prints the feasibility margins of
every (motor, gearbox) pair per joint for both rounds. The bundled catalog
numbers in src/armsizer/data/benchmark_catalog.json were chosen from this
report so that:

  * round 1 selects AC_400W_2500+ZXS20_50 (J1), AC_2_3kW_1500+ZXS40_100 (J2),
    AC_1000W_2500+ZXS40_100 (J3), AC_200W_3000+ZXS14_30 (J4);
  * round 2 upgrades exactly J1 to AC_600W_2500+ZXS20_100 (self-weight raises
    the yaw inertia past the small frame's output rating and the viscous
    motor-side RMS past the 400 W class at ratio 100) and keeps J2-J4.

Run:  python scripts/tune_catalog.py [--catalog path.json]
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from armsizer.dynamics import pro_torque_profile
from armsizer.fixtures import benchmark_program, benchmark_scenario, scenario_model
from armsizer.model import attach_actuator_masses
from armsizer.sizing import (
    SizingConfig,
    _pair_margins,
    extract_requirements,
    load_catalog,
    select_round1,
    validate_round2,
)
from armsizer.trajectory import compile_program


def margin_table(catalog, config, requirements, profile, traj, friction, joints=(0, 1, 2, 3)):
    lines = []
    for j in joints:
        req = requirements[j]
        lines.append(f"-- J{j+1}: peak {req.peak_torque:.2f} Nm, rms {req.rms_torque:.2f} Nm, "
                     f"speed {req.peak_speed:.3f} rad/s ({req.peak_speed_rpm:.2f} rpm)")
        for motor in catalog.motors:
            for gearbox in catalog.gearboxes:
                margins = _pair_margins(
                    req, motor, gearbox, config,
                    profile.tau[:, j], traj.qd_a[:, j], traj.qdd_a[:, j], traj.dt, friction[j])
                ok = all(v >= 0 for v in margins.values())
                worst = min(margins.items(), key=lambda kv: kv[1])
                if ok or worst[1] > -0.6:
                    flags = " ".join(f"{k}={v:+.3f}" for k, v in margins.items())
                    lines.append(f"   {'OK ' if ok else 'no '} {motor.name:>14s} + {gearbox.name:<10s} {flags}")
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--catalog", default="src/armsizer/data/benchmark_catalog.json")
    ap.add_argument("--full-table", action="store_true", help="print the per-pair margin tables")
    args = ap.parse_args()

    scen = benchmark_scenario()
    model = scenario_model(scen)
    start_q, prims, dt = benchmark_program(model)
    traj = compile_program(model, start_q, prims, dt=dt)
    friction = scen.friction_for(model.n_a)
    config = SizingConfig()

    print(f"cycle: {traj.duration:.3f} s, {len(traj.t)} samples")
    print("peak speeds:", np.round(np.max(np.abs(traj.qd_a), axis=0), 4))

    profile = pro_torque_profile(model, traj, scen.gravity)
    reqs = extract_requirements(profile, traj)
    for j, r in enumerate(reqs):
        print(f"J{j+1} bare:   peak {r.peak_torque:8.3f}  rms {r.rms_torque:8.3f}  "
              f"speed {r.peak_speed:.3f} rad/s")

    catalog = load_catalog(json.load(open(args.catalog)))
    r1 = select_round1(reqs, catalog, config, profile=profile, trajectory=traj, friction=friction)
    print("\nround 1:")
    for s in r1.joints:
        worst = min(s.margins.items(), key=lambda kv: kv[1])
        print(f"  {s.joint}: {s.motor} + {s.gearbox}   (tightest: {worst[0]} {worst[1]:+.3f})")

    masses = np.array([catalog.motor(s.motor).mass + catalog.gearbox(s.gearbox).mass
                       for s in r1.joints])
    print("\nround-1 actuator masses:", masses)
    loaded = attach_actuator_masses(model, masses)
    profile2 = pro_torque_profile(loaded, traj, scen.gravity)
    reqs2 = extract_requirements(profile2, traj)
    for j, (a, b) in enumerate(zip(reqs, reqs2)):
        print(f"J{j+1} loaded: peak {b.peak_torque:8.3f} ({100*(b.peak_torque/a.peak_torque-1):+5.1f}%)  "
              f"rms {b.rms_torque:8.3f} ({100*(b.rms_torque/a.rms_torque-1):+5.1f}%)")

    r2, _ = validate_round2(r1, model, traj, catalog, config, scen)
    print(f"\nround 2 (fixed point in {r2.iterations} iterations):")
    for s in r2.joints:
        worst = min(s.margins.items(), key=lambda kv: kv[1])
        mark = " *changed*" if s.changed else ""
        print(f"  {s.joint}: {s.motor} + {s.gearbox}   (tightest: {worst[0]} {worst[1]:+.3f}){mark}")

    if args.full_table:
        print("\nround-1 margins:")
        print(margin_table(catalog, config, reqs, profile, traj, friction))
        print("\nround-2 margins:")
        print(margin_table(catalog, config, reqs2, profile2, traj, friction))


if __name__ == "__main__":
    sys.exit(main())
