"""End-to-end run: program -> trajectory -> both torque paths -> metrics ->
two-round sizing, with deterministic file artifacts.

Artifact bytes depend only on (model, scenario, program, catalog, engine
version): no timestamps, fixed float formatting, sorted keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import __version__
from .analysis import ComparisonMetrics, compare_profiles, metrics_to_csv, plot_data_document
from .dynamics import TorqueProfile, demo_torque_profile, lump_serial_model, pro_torque_profile
from .kinematics import CLOSURE_TOL
from .model import RigidBodyModel, ScenarioConfig, to_document
from .sizing import (
    ActuatorCatalog,
    Selection,
    SizingConfig,
    extract_requirements,
    select_round1,
    sizing_report_document,
    validate_round2,
)
from .trajectory import (
    MotionPrimitive,
    TrajectorySamples,
    compile_program,
    program_to_document,
    trajectory_manifest,
    trajectory_to_csv,
)

ARTIFACT_KINDS = ("trajectory", "torque_demo", "torque_pro", "metrics", "sizing", "manifest")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline failed at stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True, eq=False)
class PipelineResult:
    trajectory: TrajectorySamples
    pro: TorqueProfile
    demo: TorqueProfile
    metrics: ComparisonMetrics
    round1: Selection
    round2: Selection
    loaded_profile: TorqueProfile


def run_pipeline(model: RigidBodyModel, scenario: ScenarioConfig, start_q,
                 primitives: list[MotionPrimitive], dt: float, catalog: ActuatorCatalog,
                 config: SizingConfig | None = None,
                 progress=None, artifact_sink=None) -> PipelineResult:
    """Full workflow; ``progress(stage)`` is called before each stage.

    ``artifact_sink(kind, filename, text)`` receives each artifact as soon as
    its stage completes, so a failed run retains every artifact produced
    before the failing stage.
    """
    config = config or SizingConfig()
    notify = progress or (lambda stage: None)
    sink = artifact_sink or (lambda kind, name, text: None)

    def stage(name, fn):
        notify(name)
        try:
            return fn()
        except Exception as exc:
            raise PipelineError(name, exc) from exc

    sink("manifest", "manifest.json", _json_bytes(
        run_manifest(model, scenario, start_q, primitives, dt)))
    sink("model", "model.json", _json_bytes(to_document(model)))

    traj = stage("trajectory", lambda: compile_program(model, start_q, primitives, dt=dt))
    sink("trajectory", "trajectory.csv", trajectory_to_csv(traj))
    sink("trajectory_manifest", "trajectory_manifest.json",
         _json_bytes(trajectory_manifest(traj, start_q, primitives, dt)))
    pro = stage("dynamics_pro", lambda: pro_torque_profile(model, traj, scenario.gravity))
    sink("torque_pro", "torque_pro.csv", torque_csv(pro))
    demo_model = stage("lump_serial", lambda: lump_serial_model(model))
    demo = stage("dynamics_demo", lambda: demo_torque_profile(demo_model, traj, scenario.gravity))
    sink("torque_demo", "torque_demo.csv", torque_csv(demo))
    metrics = stage("metrics", lambda: compare_profiles(demo, pro))
    sink("metrics", "metrics.csv", metrics_to_csv(metrics))
    sink("plot_data", "plot_data.json", _json_bytes(plot_data_document(demo, pro)))
    reqs = stage("requirements", lambda: extract_requirements(pro, traj))
    friction = scenario.friction_for(model.n_a)
    round1 = stage("select_round1", lambda: select_round1(
        reqs, catalog, config, profile=pro, trajectory=traj, friction=friction))
    round2, loaded = stage("validate_round2", lambda: validate_round2(
        round1, model, traj, catalog, config, scenario))
    sink("sizing", "sizing.json", _json_bytes(sizing_report_document(
        round1, round2, round1.requirements, round2.requirements)))
    notify("done")
    return PipelineResult(trajectory=traj, pro=pro, demo=demo, metrics=metrics,
                          round1=round1, round2=round2, loaded_profile=loaded)


def torque_csv(profile: TorqueProfile) -> str:
    n = profile.tau.shape[1]
    lines = ["t," + ",".join(f"tau{i+1}" for i in range(n))]
    for k in range(len(profile.t)):
        lines.append(",".join([repr(float(profile.t[k]))] +
                              [repr(float(v)) for v in profile.tau[k]]))
    return "\n".join(lines) + "\n"


def _json_bytes(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_manifest(model: RigidBodyModel, scenario: ScenarioConfig, start_q,
                 primitives, dt: float) -> dict:
    """Scenario + program + tolerances + engine version for reproducibility."""
    return {
        "engine_version": __version__,
        "model": {"name": model.name, "hash": model.document_hash(),
                  "n_a": model.n_a, "n_p": model.n_p},
        "scenario": {
            "scale": float(scenario.scale),
            "mass_exponent": scenario.scaling_law.mass_exponent,
            "inertia_exponent": scenario.scaling_law.inertia_exponent,
            "payload_mass_kg": None if scenario.payload is None else float(scenario.payload.mass),
            "payload_com_m": None if scenario.payload is None else
                [float(v) for v in scenario.payload.com_offset],
            "friction": [{"viscous": f.viscous, "coulomb": f.coulomb}
                         for f in scenario.friction_for(model.n_a)],
            "rotor_reflection_kgm2": [float(v) for v in scenario.rotor_reflection]
            if scenario.rotor_reflection else None,
            "gravity": [float(v) for v in scenario.gravity],
        },
        "program": program_to_document(start_q, primitives, dt),
        "tolerances": {
            "closure": CLOSURE_TOL,
            "kkt_residual_factor": 1e-9,
            "dt": float(dt),
        },
    }


def write_artifacts(result: PipelineResult, outdir, model: RigidBodyModel,
                    scenario: ScenarioConfig, start_q, primitives, dt: float) -> dict:
    """Write all run artifacts; returns {kind: filename}."""
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {
        "trajectory": ("trajectory.csv", trajectory_to_csv(result.trajectory)),
        "trajectory_manifest": ("trajectory_manifest.json", _json_bytes(
            trajectory_manifest(result.trajectory, start_q, primitives, dt))),
        "torque_demo": ("torque_demo.csv", torque_csv(result.demo)),
        "torque_pro": ("torque_pro.csv", torque_csv(result.pro)),
        "metrics": ("metrics.csv", metrics_to_csv(result.metrics)),
        "sizing": ("sizing.json", _json_bytes(sizing_report_document(
            result.round1, result.round2, result.round1.requirements,
            result.round2.requirements))),
        "manifest": ("manifest.json", _json_bytes(
            run_manifest(model, scenario, start_q, primitives, dt))),
        "model": ("model.json", _json_bytes(to_document(model))),
        "plot_data": ("plot_data.json", _json_bytes(plot_data_document(result.demo, result.pro))),
    }
    for kind, (name, payload) in files.items():
        (outdir / name).write_text(payload)
    return {kind: name for kind, (name, _) in files.items()}
