"""Motor-side torque mapping, requirement extraction and two-round selection.

Feasibility of a (motor, gearbox) pair for one joint:

  (a) sf_t * peak joint torque <= min(gearbox peak output, motor peak * N * eta)
  (b) sf_t * rms joint torque  <= min(gearbox rated output, motor rated * N * eta)
  (c) sf_s * peak joint speed * N <= motor rated speed and gearbox max input speed

plus, when the torque trace is available, a pointwise motor-side recheck of
(a)/(b) through motor_side_torque (rotor inertia, viscous/Coulomb friction
and the driving/backdriving efficiency direction included). The winner is
the lexicographic minimum of (motor rated power, motor+gearbox mass, ratio),
ties broken by catalog order.

Round 2 mounts the selected parts' masses on the mechanism, re-runs the
constrained inverse dynamics over the same cycle, re-extracts requirements
and re-selects any joint whose pick became infeasible, iterating to a fixed
point.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TorqueProfile, gravity_forces, pro_torque_profile
from .kinematics import solve_closure
from .model import FrictionParams, RigidBodyModel, ScenarioConfig, attach_actuator_masses
from .trajectory import TrajectorySamples

# re-exported: FrictionParams lives with the model-level scenario types
__all__ = [
    "FrictionParams",
    "Motor",
    "Gearbox",
    "ActuatorCatalog",
    "SizingConfig",
    "JointRequirements",
    "JointSelection",
    "Selection",
    "SizingError",
    "InfeasibleSelection",
    "radps_to_rpm",
    "motor_side_torque",
    "extract_requirements",
    "select_round1",
    "validate_round2",
    "load_catalog",
    "load_catalog_csv",
    "catalog_to_document",
    "catalog_to_json",
    "sizing_report_document",
]


class SizingError(ValueError):
    pass


class InfeasibleSelection(SizingError):
    def __init__(self, joint: str, reason: str):
        super().__init__(f"no feasible motor-gearbox pair for {joint}: binding constraint is {reason}")
        self.joint = joint
        self.reason = reason


@dataclass(frozen=True)
class Motor:
    name: str
    rated_torque: float
    peak_torque: float
    rated_speed: float  # rpm
    max_speed: float  # rpm
    rotor_inertia: float  # kg m^2
    mass: float
    rated_power: float  # W

    def validate(self) -> list[str]:
        out = []
        if self.peak_torque < self.rated_torque:
            out.append(f"motor {self.name}: peak torque below rated torque")
        if self.max_speed < self.rated_speed:
            out.append(f"motor {self.name}: max speed below rated speed")
        for fld in ("rated_torque", "peak_torque", "rated_speed", "max_speed",
                    "rotor_inertia", "mass", "rated_power"):
            if getattr(self, fld) <= 0:
                out.append(f"motor {self.name}: {fld} must be positive")
        return out


@dataclass(frozen=True)
class Gearbox:
    name: str
    ratio: float
    rated_output_torque: float
    peak_output_torque: float
    efficiency: float
    mass: float
    max_input_speed: float  # rpm

    def validate(self) -> list[str]:
        out = []
        if self.ratio <= 1.0:
            out.append(f"gearbox {self.name}: ratio must be > 1")
        if self.peak_output_torque < self.rated_output_torque:
            out.append(f"gearbox {self.name}: peak output below rated output")
        if not (0.0 < self.efficiency <= 1.0):
            out.append(f"gearbox {self.name}: efficiency must be in (0, 1]")
        for fld in ("rated_output_torque", "peak_output_torque", "mass", "max_input_speed"):
            if getattr(self, fld) <= 0:
                out.append(f"gearbox {self.name}: {fld} must be positive")
        return out


@dataclass(frozen=True)
class ActuatorCatalog:
    motors: tuple[Motor, ...]
    gearboxes: tuple[Gearbox, ...]

    def motor(self, name: str) -> Motor:
        for m in self.motors:
            if m.name == name:
                return m
        raise SizingError(f"unknown motor {name!r}")

    def gearbox(self, name: str) -> Gearbox:
        for g in self.gearboxes:
            if g.name == name:
                return g
        raise SizingError(f"unknown gearbox {name!r}")


@dataclass(frozen=True)
class SizingConfig:
    sf_torque: float = 1.5
    sf_speed: float = 1.2
    max_round2_iterations: int = 5

    def __post_init__(self):
        if self.sf_torque < 1.0 or self.sf_speed < 1.0:
            raise SizingError("safety factors must be >= 1")


@dataclass(frozen=True)
class JointRequirements:
    peak_torque: float
    rms_torque: float
    peak_speed: float  # rad/s

    @property
    def peak_speed_rpm(self) -> float:
        return radps_to_rpm(self.peak_speed)


@dataclass(frozen=True)
class JointSelection:
    joint: str
    motor: str
    gearbox: str
    margins: dict
    feasible: bool = True
    changed: bool = False


@dataclass(frozen=True)
class Selection:
    round: int
    joints: tuple[JointSelection, ...]
    requirements: tuple[JointRequirements, ...]
    iterations: int = 1


def radps_to_rpm(w: float) -> float:
    return w * 60.0 / (2.0 * np.pi)


def motor_side_torque(tau_joint, qd, qdd, gearbox: Gearbox, motor: Motor,
                      friction: FrictionParams):
    """Joint-side torque/state mapped through the drivetrain to the motor shaft.

    Efficiency helps or hurts depending on power direction: driving divides
    by N*eta, backdriving multiplies by eta/N. Viscous and Coulomb terms act
    on the motor-side speed; sgn(0) = 0.
    """
    tau_joint = np.asarray(tau_joint, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    N, eta = gearbox.ratio, gearbox.efficiency
    driving = tau_joint * qd >= 0.0
    eff = np.where(driving, eta, 1.0 / eta)
    w_m = N * qd
    tau = (tau_joint / (N * eff)
           + motor.rotor_inertia * N * qdd
           + friction.viscous * w_m
           + friction.coulomb * np.sign(w_m))
    return tau if tau.ndim else float(tau)


_trapz = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 compatibility


def _trapezoid_mean_square(x: np.ndarray, dt: float) -> float:
    sq = x**2
    if len(sq) < 2:
        return float(sq[0]) if len(sq) else 0.0
    total = _trapz(sq, dx=dt)
    return float(total / (dt * (len(sq) - 1)))


def extract_requirements(profile: TorqueProfile, trajectory: TrajectorySamples
                         ) -> tuple[JointRequirements, ...]:
    """Peak/RMS torque and peak speed per joint over the full cycle."""
    if len(profile.t) == 0:
        raise SizingError("empty torque profile")
    if len(profile.t) != len(trajectory.t):
        raise SizingError("torque profile and trajectory are on different time grids")
    out = []
    for j in range(profile.tau.shape[1]):
        tau = profile.tau[:, j]
        out.append(JointRequirements(
            peak_torque=float(np.max(np.abs(tau))),
            rms_torque=float(np.sqrt(_trapezoid_mean_square(tau, trajectory.dt))),
            peak_speed=float(np.max(np.abs(trajectory.qd_a[:, j]))),
        ))
    return tuple(out)


# ---------------------------------------------------------------------------
# feasibility


def _pair_margins(req: JointRequirements, motor: Motor, gearbox: Gearbox, config: SizingConfig,
                  tau_trace=None, qd_trace=None, qdd_trace=None, dt: float | None = None,
                  friction: FrictionParams | None = None) -> dict:
    """Margins (capacity/demand - 1) for every check; negative means violated."""
    N, eta = gearbox.ratio, gearbox.efficiency
    sf_t, sf_s = config.sf_torque, config.sf_speed
    margins = {}

    peak_capacity = min(gearbox.peak_output_torque, motor.peak_torque * N * eta)
    demand = sf_t * req.peak_torque
    margins["torque_peak"] = peak_capacity / demand - 1.0 if demand > 0 else np.inf

    rated_capacity = min(gearbox.rated_output_torque, motor.rated_torque * N * eta)
    demand = sf_t * req.rms_torque
    margins["torque_rms"] = rated_capacity / demand - 1.0 if demand > 0 else np.inf

    demand = sf_s * req.peak_speed_rpm * N
    speed_capacity = min(motor.rated_speed, gearbox.max_input_speed)
    margins["speed"] = speed_capacity / demand - 1.0 if demand > 0 else np.inf

    if tau_trace is not None:
        fr = friction or FrictionParams()
        tau_m = motor_side_torque(tau_trace, qd_trace, qdd_trace, gearbox, motor, fr)
        demand = sf_t * float(np.max(np.abs(tau_m)))
        margins["motor_peak"] = motor.peak_torque / demand - 1.0 if demand > 0 else np.inf
        rms_m = float(np.sqrt(_trapezoid_mean_square(tau_m, dt)))
        demand = sf_t * rms_m
        margins["motor_rms"] = motor.rated_torque / demand - 1.0 if demand > 0 else np.inf
    return margins


def _pair_feasible(margins: dict) -> bool:
    return all(v >= 0.0 for v in margins.values())


_JOINT_TRACES_KW = ("profile", "trajectory", "friction")


def _select_joint(joint: str, req: JointRequirements, catalog: ActuatorCatalog,
                  config: SizingConfig, tau_trace=None, qd_trace=None, qdd_trace=None,
                  dt=None, friction=None) -> JointSelection:
    best = None
    best_key = None
    nearest_fail = (None, -np.inf)  # (check name, best negative margin)
    for motor in catalog.motors:
        for gearbox in catalog.gearboxes:
            margins = _pair_margins(req, motor, gearbox, config, tau_trace, qd_trace,
                                    qdd_trace, dt, friction)
            if _pair_feasible(margins):
                key = (motor.rated_power, motor.mass + gearbox.mass, gearbox.ratio)
                if best_key is None or key < best_key:
                    best_key = key
                    best = JointSelection(joint=joint, motor=motor.name, gearbox=gearbox.name,
                                          margins=margins)
            else:
                check, worst = min(margins.items(), key=lambda kv: kv[1])
                if worst > nearest_fail[1]:
                    nearest_fail = (check, worst)
    if best is None:
        raise InfeasibleSelection(joint, nearest_fail[0] or "torque_peak")
    return best


def _joint_names(n_a: int) -> list[str]:
    return [f"J{i+1}" for i in range(n_a)]


def select_round1(requirements, catalog: ActuatorCatalog, config: SizingConfig,
                  profile: TorqueProfile | None = None,
                  trajectory: TrajectorySamples | None = None,
                  friction: tuple[FrictionParams, ...] | None = None) -> Selection:
    """Cheapest feasible pair per joint from trajectory requirements.

    Passing the torque profile and trajectory enables the pointwise
    motor-side recheck; without them only the rating checks (a)-(c) apply.
    """
    if not catalog.motors or not catalog.gearboxes:
        raise SizingError("catalog must contain motors and gearboxes")
    names = _joint_names(len(requirements))
    joints = []
    for j, (name, req) in enumerate(zip(names, requirements)):
        traces = (None, None, None, None, None)
        if profile is not None and trajectory is not None:
            fr = friction[j] if friction else FrictionParams()
            traces = (profile.tau[:, j], trajectory.qd_a[:, j], trajectory.qdd_a[:, j],
                      trajectory.dt, fr)
        joints.append(_select_joint(name, req, catalog, config, *traces))
    return Selection(round=1, joints=tuple(joints), requirements=tuple(requirements))


def _static_moment_increments(model: RigidBodyModel, masses: np.ndarray) -> np.ndarray:
    """Gravity-torque increment estimate per joint from added point masses.

    Cheap ordering heuristic for the round-2 re-checks; never used to declare
    feasibility.
    """
    q0 = np.zeros(model.n)
    if model.closures:
        q0 = solve_closure(model, np.zeros(model.n_a))
    base = gravity_forces(model, q0)
    loaded = attach_actuator_masses(model, masses)
    return np.abs(gravity_forces(loaded, q0) - base)[: model.n_a]


def validate_round2(selection_r1: Selection, model: RigidBodyModel,
                    trajectory: TrajectorySamples, catalog: ActuatorCatalog,
                    config: SizingConfig, scenario: ScenarioConfig | None = None
                    ) -> tuple[Selection, TorqueProfile]:
    """Mass-aware revalidation: mount the chosen actuators, re-simulate, and
    re-select any joint whose pick no longer holds. Returns the fixed-point
    selection and the final mass-loaded torque profile."""
    scenario = scenario or ScenarioConfig()
    friction = scenario.friction_for(model.n_a)
    gravity = scenario.gravity
    current = list(selection_r1.joints)
    names = _joint_names(model.n_a)
    profile = None
    requirements = selection_r1.requirements

    for iteration in range(1, config.max_round2_iterations + 1):
        masses = np.array([catalog.motor(s.motor).mass + catalog.gearbox(s.gearbox).mass
                           for s in current])
        loaded = attach_actuator_masses(model, masses)
        profile = pro_torque_profile(loaded, trajectory, gravity)
        requirements = extract_requirements(profile, trajectory)

        order = np.argsort(-_static_moment_increments(model, masses))
        changed_any = False
        for j in order:
            req = requirements[j]
            traces = (profile.tau[:, j], trajectory.qd_a[:, j], trajectory.qdd_a[:, j],
                      trajectory.dt, friction[j])
            margins = _pair_margins(req, catalog.motor(current[j].motor),
                                    catalog.gearbox(current[j].gearbox), config, *traces)
            if _pair_feasible(margins):
                current[j] = JointSelection(joint=names[j], motor=current[j].motor,
                                            gearbox=current[j].gearbox, margins=margins,
                                            changed=current[j].changed)
                continue
            fresh = _select_joint(names[j], req, catalog, config, *traces)
            changed = (fresh.motor != current[j].motor) or (fresh.gearbox != current[j].gearbox)
            current[j] = JointSelection(joint=names[j], motor=fresh.motor, gearbox=fresh.gearbox,
                                        margins=fresh.margins, changed=changed or current[j].changed)
            changed_any = changed_any or changed
        if not changed_any:
            return (Selection(round=2, joints=tuple(current), requirements=requirements,
                              iterations=iteration), profile)
    raise SizingError(
        f"round-2 selection did not reach a fixed point in {config.max_round2_iterations} iterations")


# ---------------------------------------------------------------------------
# catalog I/O


_MOTOR_FIELDS = ["name", "rated_torque_Nm", "peak_torque_Nm", "rated_speed_rpm",
                 "max_speed_rpm", "rotor_inertia_kgm2", "mass_kg", "rated_power_W"]
_GEARBOX_FIELDS = ["name", "ratio", "rated_out_Nm", "peak_out_Nm", "efficiency",
                   "mass_kg", "max_input_rpm"]


def load_catalog(document) -> ActuatorCatalog:
    """Validated catalog from a parsed JSON document (or JSON text)."""
    if isinstance(document, str):
        document = json.loads(document)
    if not isinstance(document, dict):
        raise SizingError("catalog document must be a JSON object")
    problems = []
    motors, gearboxes = [], []
    for i, row in enumerate(document.get("motors", [])):
        missing = [f for f in _MOTOR_FIELDS if f not in row]
        if missing:
            problems.append(f"motors[{i}]: missing fields {missing}")
            continue
        motors.append(Motor(
            name=str(row["name"]),
            rated_torque=float(row["rated_torque_Nm"]),
            peak_torque=float(row["peak_torque_Nm"]),
            rated_speed=float(row["rated_speed_rpm"]),
            max_speed=float(row["max_speed_rpm"]),
            rotor_inertia=float(row["rotor_inertia_kgm2"]),
            mass=float(row["mass_kg"]),
            rated_power=float(row["rated_power_W"]),
        ))
    for i, row in enumerate(document.get("gearboxes", [])):
        missing = [f for f in _GEARBOX_FIELDS if f not in row]
        if missing:
            problems.append(f"gearboxes[{i}]: missing fields {missing}")
            continue
        gearboxes.append(Gearbox(
            name=str(row["name"]),
            ratio=float(row["ratio"]),
            rated_output_torque=float(row["rated_out_Nm"]),
            peak_output_torque=float(row["peak_out_Nm"]),
            efficiency=float(row["efficiency"]),
            mass=float(row["mass_kg"]),
            max_input_speed=float(row["max_input_rpm"]),
        ))
    if not motors:
        problems.append("catalog has no motors")
    if not gearboxes:
        problems.append("catalog has no gearboxes")
    for part in motors + gearboxes:
        problems.extend(part.validate())
    for seq, kind in ((motors, "motor"), (gearboxes, "gearbox")):
        seen = set()
        for p in seq:
            if p.name in seen:
                problems.append(f"duplicate {kind} name {p.name!r}")
            seen.add(p.name)
    if problems:
        raise SizingError("invalid catalog: " + "; ".join(problems))
    return ActuatorCatalog(motors=tuple(motors), gearboxes=tuple(gearboxes))


def catalog_to_document(catalog: ActuatorCatalog) -> dict:
    return {
        "motors": [
            {
                "name": m.name,
                "rated_torque_Nm": m.rated_torque,
                "peak_torque_Nm": m.peak_torque,
                "rated_speed_rpm": m.rated_speed,
                "max_speed_rpm": m.max_speed,
                "rotor_inertia_kgm2": m.rotor_inertia,
                "mass_kg": m.mass,
                "rated_power_W": m.rated_power,
            }
            for m in catalog.motors
        ],
        "gearboxes": [
            {
                "name": g.name,
                "ratio": g.ratio,
                "rated_out_Nm": g.rated_output_torque,
                "peak_out_Nm": g.peak_output_torque,
                "efficiency": g.efficiency,
                "mass_kg": g.mass,
                "max_input_rpm": g.max_input_speed,
            }
            for g in catalog.gearboxes
        ],
    }


def catalog_to_json(catalog: ActuatorCatalog) -> str:
    return json.dumps(catalog_to_document(catalog), indent=2) + "\n"


def load_catalog_csv(motors_csv: str, gearboxes_csv: str) -> ActuatorCatalog:
    """Catalog from the two-table CSV form (one file per part family)."""
    import csv

    def rows(text: str, fields: list[str], label: str) -> list[dict]:
        reader = csv.DictReader(io.StringIO(text.strip()))
        got = reader.fieldnames or []
        if list(got) != fields:
            raise SizingError(f"{label} CSV header must be {','.join(fields)}; got {','.join(got)}")
        return list(reader)

    doc = {
        "motors": rows(motors_csv, _MOTOR_FIELDS, "motors"),
        "gearboxes": rows(gearboxes_csv, _GEARBOX_FIELDS, "gearboxes"),
    }
    return load_catalog(doc)


def sizing_report_document(round1: Selection, round2: Selection,
                           requirements_r1, requirements_r2) -> dict:
    """Export document with requirements, both rounds, margins and iterations."""

    def req_doc(reqs):
        return [
            {
                "peak_torque_Nm": r.peak_torque,
                "rms_torque_Nm": r.rms_torque,
                "peak_speed_radps": r.peak_speed,
                "peak_speed_rpm": r.peak_speed_rpm,
            }
            for r in reqs
        ]

    def sel_doc(sel: Selection):
        return [
            {
                "joint": s.joint,
                "motor": s.motor,
                "gearbox": s.gearbox,
                # unconstrained checks (e.g. speed margin of a parked joint)
                # serialize as null rather than Infinity
                "margins": {k: (float(v) if np.isfinite(v) else None)
                            for k, v in s.margins.items()},
                "feasible": s.feasible,
                "changed": s.changed,
            }
            for s in sel.joints
        ]

    return {
        "requirements_round1": req_doc(requirements_r1),
        "requirements_round2": req_doc(requirements_r2),
        "round1": sel_doc(round1),
        "round2": sel_doc(round2),
        "iterations": round2.iterations,
    }
