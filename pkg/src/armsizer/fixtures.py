"""Bundled benchmark fixture: scenario, palletizing cycle and actuator catalog.

The benchmark is the scaled palletizer (s = 1.6, calibrated exponents
1.7/3.7) carrying a 10 kg payload through a cyclic pick-and-place motion
between two pallet stations with the tool yaw held fixed. Joint waypoints
are given directly; the straight-line pick/place strokes derive their
Cartesian targets from the model so the same cycle builds at any scale.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .kinematics import forward_kinematics, solve_closure
from .model import FrictionParams, PayloadSpec, RigidBodyModel, ScenarioConfig, attach_payload
from .robots import CALIBRATED_LAW
from .trajectory import DEFAULT_DT, MotionPrimitive, Waypoint

BENCHMARK_SCALE = 1.6
BENCHMARK_PAYLOAD = PayloadSpec(
    mass=10.0,
    com_offset=(0.0, 0.0, 0.1),
    inertia=np.diag([0.0547, 0.0963, 0.1083]),
)

# motor-side friction per joint; the slew bearing (J1) and the elbow drive
# train (J3) carry the dominant viscous drag
BENCHMARK_FRICTION = (
    FrictionParams(viscous=0.019, coulomb=0.08),
    FrictionParams(viscous=0.015, coulomb=0.10),
    FrictionParams(viscous=0.016, coulomb=0.15),
    FrictionParams(viscous=0.002, coulomb=0.03),
)

BENCHMARK_ROTOR_REFLECTION = (0.0, 0.0, 0.0, 0.0)

# cycle postures [rad]: home parks over the pick station so the first move is
# a pure shoulder reach; the yaw transfer swings 3.0 rad between stations,
# long enough for the slew axis to reach its cruise speed
HOME_Q = np.array([-1.5, 0.05, -0.75, 0.0])
ABOVE_PICK_Q = np.array([-1.5, 0.95, -0.55, 0.0])
ABOVE_PLACE_Q = np.array([1.5, 0.95, -0.55, 0.0])

JOINT_VMAX = np.array([1.2, 1.2, 1.066, 0.8])
JOINT_AMAX = np.array([0.5, 1.8, 1.4, 1.2])
LINE_SPEED = 0.4
LINE_ACCEL = 0.8
STROKE_AT_BENCHMARK = 0.30  # vertical pick/place stroke at s = 1.6, scales linearly


def benchmark_scenario() -> ScenarioConfig:
    return ScenarioConfig(
        scale=BENCHMARK_SCALE,
        scaling_law=CALIBRATED_LAW,
        payload=BENCHMARK_PAYLOAD,
        friction=BENCHMARK_FRICTION,
        rotor_reflection=BENCHMARK_ROTOR_REFLECTION,
    )


def scenario_model(scenario: ScenarioConfig, kind: str = "cr4") -> RigidBodyModel:
    from .robots import build_robot

    model = build_robot(kind, scenario.scale, scenario.scaling_law)
    if scenario.payload is not None:
        model = attach_payload(model, scenario.payload)
    return model


def _tool_pose(model: RigidBodyModel, q_a: np.ndarray) -> np.ndarray:
    q = solve_closure(model, q_a) if model.closures else np.asarray(q_a, dtype=float)
    return forward_kinematics(model, q, model.tool_frame)


def benchmark_program(model: RigidBodyModel) -> tuple[np.ndarray, list[MotionPrimitive], float]:
    """Pick-and-place cycle: home, pick stroke, transfer, place stroke, home."""
    stroke = STROKE_AT_BENCHMARK * model.scale / BENCHMARK_SCALE

    def drop(pose: np.ndarray) -> np.ndarray:
        out = pose.copy()
        out[2, 3] -= stroke
        return out

    movej = lambda q: MotionPrimitive("MoveJ", Waypoint("joint", joint_target=q.copy()),
                                      JOINT_VMAX.copy(), JOINT_AMAX.copy())
    movel = lambda pose: MotionPrimitive("MoveL", Waypoint("cartesian", pose_target=pose),
                                         LINE_SPEED, LINE_ACCEL)

    above_pick_pose = _tool_pose(model, ABOVE_PICK_Q)
    above_place_pose = _tool_pose(model, ABOVE_PLACE_Q)
    primitives = [
        movej(ABOVE_PICK_Q),            # home -> above pick
        movel(drop(above_pick_pose)),   # descend to pick
        movel(above_pick_pose),         # lift
        movej(ABOVE_PLACE_Q),           # yaw transfer
        movel(drop(above_place_pose)),  # descend to place
        movel(above_place_pose),        # lift
        movej(HOME_Q),                  # return home
    ]
    return HOME_Q.copy(), primitives, DEFAULT_DT


def load_benchmark_catalog_document() -> dict:
    text = resources.files("armsizer.data").joinpath("benchmark_catalog.json").read_text()
    return json.loads(text)
