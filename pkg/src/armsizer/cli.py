"""Command line front end.

    armsizer simulate --program prog.json --scenario scen.json --out rundir
    armsizer size     --torque rundir/torque_pro.csv --trajectory rundir/trajectory.csv ...
    armsizer compare  --first a.csv --second b.csv [--out metrics.csv]
    armsizer serve    [--host H] [--port P] [--runs DIR]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _scenario(doc: dict):
    from .service import _scenario_from_document

    return _scenario_from_document(doc)


def cmd_simulate(args) -> int:
    from .model import attach_payload
    from .pipeline import run_pipeline, write_artifacts
    from .robots import build_robot
    from .sizing import SizingConfig, load_catalog
    from .trajectory import program_from_document

    if args.scenario:
        scenario = _scenario(_load_json(args.scenario))
    else:
        from .fixtures import benchmark_scenario

        scenario = benchmark_scenario()
    model = build_robot(args.robot, scenario.scale, scenario.scaling_law)
    if scenario.payload is not None:
        model = attach_payload(model, scenario.payload)

    if args.program:
        start_q, primitives, dt = program_from_document(_load_json(args.program))
    else:
        from .fixtures import benchmark_program

        start_q, primitives, dt = benchmark_program(model)
    if args.dt:
        dt = args.dt

    if args.catalog:
        catalog = load_catalog(_load_json(args.catalog))
    else:
        from .fixtures import load_benchmark_catalog_document

        catalog = load_catalog(load_benchmark_catalog_document())

    result = run_pipeline(model, scenario, start_q, primitives, dt, catalog, SizingConfig(),
                          progress=lambda s: print(f"[stage] {s}", file=sys.stderr))
    files = write_artifacts(result, args.out, model, scenario, start_q, primitives, dt)
    for kind in sorted(files):
        print(f"{kind}: {Path(args.out) / files[kind]}")
    return 0


def cmd_size(args) -> int:
    from .dynamics import TorqueProfile
    from .sizing import (SizingConfig, extract_requirements, load_catalog, load_catalog_csv,
                         select_round1)
    from .trajectory import trajectory_from_csv

    traj = trajectory_from_csv(Path(args.trajectory).read_text())
    rows = [ln.split(",") for ln in Path(args.torque).read_text().strip().splitlines()[1:]]
    data = np.array([[float(v) for v in r] for r in rows])
    profile = TorqueProfile(t=data[:, 0], tau=data[:, 1:], path="PRO")

    if args.catalog.endswith(".json"):
        catalog = load_catalog(_load_json(args.catalog))
    else:
        catalog = load_catalog_csv(Path(args.catalog).read_text(),
                                   Path(args.gearboxes).read_text())
    config = SizingConfig(sf_torque=args.sf_torque, sf_speed=args.sf_speed)
    reqs = extract_requirements(profile, traj)
    selection = select_round1(reqs, catalog, config, profile=profile, trajectory=traj)
    doc = {
        "requirements": [
            {"joint": s.joint, "peak_torque_Nm": r.peak_torque, "rms_torque_Nm": r.rms_torque,
             "peak_speed_radps": r.peak_speed, "peak_speed_rpm": r.peak_speed_rpm}
            for s, r in zip(selection.joints, reqs)
        ],
        "selection": [
            {"joint": s.joint, "motor": s.motor, "gearbox": s.gearbox,
             "margins": {k: (float(v) if np.isfinite(v) else None)
                         for k, v in s.margins.items()}}
            for s in selection.joints
        ],
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_compare(args) -> int:
    from .analysis import compare_profiles, metrics_to_csv
    from .dynamics import TorqueProfile

    def read(path):
        rows = [ln.split(",") for ln in Path(path).read_text().strip().splitlines()[1:]]
        data = np.array([[float(v) for v in r] for r in rows])
        return TorqueProfile(t=data[:, 0], tau=data[:, 1:], path=Path(path).stem)

    metrics = compare_profiles(read(args.first), read(args.second))
    text = metrics_to_csv(metrics)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_serve(args) -> int:
    from .service import main as serve_main

    serve_main(host=args.host, port=args.port, artifact_root=args.runs)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="armsizer",
                                 description="closed-chain manipulator dynamics and actuator sizing")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="program + scenario -> run artifacts")
    p.add_argument("--robot", default="cr4", choices=["cr4", "cr6"])
    p.add_argument("--scenario", help="scenario JSON (default: bundled benchmark values)")
    p.add_argument("--program", help="program JSON (default: bundled palletizing cycle)")
    p.add_argument("--catalog", help="catalog JSON (default: bundled benchmark catalog)")
    p.add_argument("--dt", type=float, help="override sampling period [s]")
    p.add_argument("--out", required=True, help="output run directory")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("size", help="torque + trajectory CSVs -> sizing report")
    p.add_argument("--torque", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--catalog", required=True, help="catalog JSON, or motors CSV with --gearboxes")
    p.add_argument("--gearboxes", help="gearboxes CSV when --catalog is a motors CSV")
    p.add_argument("--sf-torque", type=float, default=1.5)
    p.add_argument("--sf-speed", type=float, default=1.2)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_size)

    p = sub.add_parser("compare", help="two torque CSVs -> metrics CSV")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--runs", help="artifact root directory")
    p.set_defaults(fn=cmd_serve)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
