"""Parametric robot builders.

Two families are provided:

* ``cr4`` -- a 4-axis palletizer: base yaw J1, shoulder pitch J2, a
  shoulder-mounted elbow drive J3 turning a short crank, and wrist yaw J4.
  Crank and coupler close a parallelogram four-bar onto a bracket fixed to
  the forearm, so the forearm pitch is ground-referenced by J3 alone. The
  two planar gaps between the coupler tip and the bracket form the loop
  closure; the elbow pivot and the crank-coupler pivot are the passive
  joints, giving a square closure (2 passive coordinates, 2 constraints).
  At the zero configuration the arm is stretched horizontally along +x and
  the crank points straight up, where the exact passive solution is
  qp1 = q3 - q2 and qp2 = q2 - q3.

* ``cr6`` -- a plain serial 6R arm (yaw, two pitches, forearm roll, wrist
  pitch, flange roll), no closures.

All reference dimensions below are the unit-scale fixture; only ratios and
consistency are meaningful. Reference reach (shoulder to tool, fully
stretched, measured horizontally) is UPPER_ARM + FOREARM = 0.945 m.
"""

from __future__ import annotations

import numpy as np

from .model import (
    JointSpec,
    Link,
    LinkInertia,
    LoopClosureSpec,
    ModelError,
    RigidBodyModel,
    ScalingLaw,
    apply_scaling,
    rod_inertia,
)
from .transforms import rot_y, translate, translation_of

# CR4 reference geometry [m], chosen so the stretched reach is 0.945 m
CR4_COLUMN_HEIGHT = 0.35
CR4_SHOULDER_OFFSET = 0.05
CR4_UPPER_ARM = 0.47
CR4_FOREARM = 0.475
CR4_CRANK = 0.12  # parallelogram offset link
CR4_TOOL_DROP = 0.10

# CR4 reference link masses [kg], uniform slender members
CR4_MASSES = {
    "column": 16.0,
    "upper_arm": 9.0,
    "crank": 1.6,
    "forearm": 7.0,
    "coupler": 2.4,
    "wrist": 2.2,
    "tool_plate": 1.2,
}

DEFAULT_LAW = ScalingLaw(mass_exponent=3.0, inertia_exponent=5.0)
CALIBRATED_LAW = ScalingLaw(mass_exponent=1.7, inertia_exponent=3.7)

_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])
_NO_AXIS = np.zeros(3)


def _rod_link(name: str, mass: float, length: float, axis: str, radius: float = 0.04) -> Link:
    com = {"x": (length / 2, 0, 0), "y": (0, length / 2, 0), "z": (0, 0, length / 2)}[axis]
    return Link(name, LinkInertia(mass, np.array(com, dtype=float), rod_inertia(mass, length, radius, axis)))


def cr4_reference() -> RigidBodyModel:
    """Unit-scale palletizer fixture."""
    h, e = CR4_COLUMN_HEIGHT, CR4_SHOULDER_OFFSET
    l2, l3, d = CR4_UPPER_ARM, CR4_FOREARM, CR4_CRANK

    links = (
        Link("base", LinkInertia.point(0.0)),
        _rod_link("column", CR4_MASSES["column"], h, "z", radius=0.08),
        _rod_link("upper_arm", CR4_MASSES["upper_arm"], l2, "x", radius=0.05),
        _rod_link("crank", CR4_MASSES["crank"], d, "x", radius=0.03),
        _rod_link("forearm", CR4_MASSES["forearm"], l3, "x", radius=0.045),
        _rod_link("coupler", CR4_MASSES["coupler"], l2, "x", radius=0.025),
        Link("wrist", LinkInertia(CR4_MASSES["wrist"], np.array([0.0, 0.0, -CR4_TOOL_DROP / 2]),
                                  rod_inertia(CR4_MASSES["wrist"], CR4_TOOL_DROP, 0.05, "z"))),
        Link("tool", LinkInertia(CR4_MASSES["tool_plate"], np.zeros(3),
                                 rod_inertia(CR4_MASSES["tool_plate"], 0.06, 0.06, "z"))),
        Link("forearm_bracket", LinkInertia.point(0.0)),
        Link("coupler_tip", LinkInertia.point(0.0)),
    )

    joints = (
        JointSpec("J1", "revolute", _Z, "base", "column", "actuated",
                  (-2.967, 2.967), 1.5, translate(0, 0, 0)),
        JointSpec("J2", "revolute", _Y, "column", "upper_arm", "actuated",
                  (-1.45, 1.45), 1.5, translate(e, 0, h)),
        JointSpec("J3", "revolute", _Y, "column", "crank", "actuated",
                  (-1.45, 1.45), 1.5, translate(e, 0, h) @ rot_y(-np.pi / 2)),
        JointSpec("P1", "revolute", _Y, "upper_arm", "forearm", "passive",
                  (-2.8, 2.8), 10.0, translate(l2, 0, 0)),
        JointSpec("P2", "revolute", _Y, "crank", "coupler", "passive",
                  (-2.8, 2.8), 10.0, translate(d, 0, 0) @ rot_y(np.pi / 2)),
        JointSpec("J4", "revolute", _Z, "forearm", "wrist", "actuated",
                  (-2.967, 2.967), 2.5, translate(l3, 0, 0)),
        JointSpec("F_tool", "fixed", _NO_AXIS, "wrist", "tool", None,
                  (0.0, 0.0), 0.0, translate(0, 0, -CR4_TOOL_DROP)),
        JointSpec("F_bracket", "fixed", _NO_AXIS, "forearm", "forearm_bracket", None,
                  (0.0, 0.0), 0.0, translate(0, 0, d)),
        JointSpec("F_tip", "fixed", _NO_AXIS, "coupler", "coupler_tip", None,
                  (0.0, 0.0), 0.0, translate(l2, 0, 0)),
    )

    closures = (LoopClosureSpec("coupler_tip", "forearm_bracket", ("x", "z")),)
    return RigidBodyModel(
        name="cr4", links=links, joints=joints, closures=closures, tool_frame="tool",
    )


def cr4_reference_passive_solution() -> np.ndarray:
    """Passive angles that assemble the parallelogram at q_a = 0."""
    return np.zeros(2)


def cr4_passive_solution(q_a: np.ndarray) -> np.ndarray:
    """Exact parallelogram solution: elbow tracks q3 - q2, coupler the negative."""
    return np.array([q_a[2] - q_a[1], q_a[1] - q_a[2]])


# CR6 reference geometry [m]
CR6_SEGMENTS = (
    ("column", 0.33, "z"),
    ("shoulder_mount", 0.08, "x"),
    ("upper_arm", 0.42, "x"),
    ("elbow_mount", 0.05, "x"),
    ("forearm", 0.35, "x"),
    ("wrist_a", 0.10, "x"),
    ("flange", 0.08, "x"),
)

CR6_MASSES = {
    "column": 11.0,
    "shoulder_mount": 3.0,
    "upper_arm": 7.5,
    "elbow_mount": 2.0,
    "forearm": 4.5,
    "wrist_a": 1.6,
    "flange": 0.9,
    "tool": 0.6,
}


def cr6_reference() -> RigidBodyModel:
    """Unit-scale serial 6R fixture, zero pose stretched along +x."""
    seg = {name: length for name, length, _ in CR6_SEGMENTS}
    links = [Link("base", LinkInertia.point(0.0))]
    for name, length, axis in CR6_SEGMENTS:
        links.append(_rod_link(name, CR6_MASSES[name], length, axis, radius=0.035))
    links.append(Link("tool", LinkInertia(CR6_MASSES["tool"], np.zeros(3), rod_inertia(0.6, 0.05, 0.04, "z"))))

    x = np.array([1.0, 0.0, 0.0])
    joints = (
        JointSpec("J1", "revolute", _Z, "base", "column", "actuated", (-2.967, 2.967), 2.6, translate(0, 0, 0)),
        JointSpec("J2", "revolute", _Y, "column", "shoulder_mount", "actuated", (-1.9, 1.9), 2.6,
                  translate(0, 0, seg["column"])),
        JointSpec("J3", "revolute", _Y, "shoulder_mount", "upper_arm", "actuated", (-2.6, 2.6), 2.9,
                  translate(seg["shoulder_mount"], 0, 0)),
        JointSpec("J4", "revolute", x, "upper_arm", "elbow_mount", "actuated", (-3.1, 3.1), 3.5,
                  translate(seg["upper_arm"], 0, 0)),
        JointSpec("J5", "revolute", _Y, "elbow_mount", "forearm", "actuated", (-2.2, 2.2), 3.5,
                  translate(seg["elbow_mount"], 0, 0)),
        JointSpec("J6", "revolute", x, "forearm", "wrist_a", "actuated", (-6.2, 6.2), 4.4,
                  translate(seg["forearm"], 0, 0)),
        JointSpec("F_flange", "fixed", _NO_AXIS, "wrist_a", "flange", None, (0.0, 0.0), 0.0,
                  translate(seg["wrist_a"], 0, 0)),
        JointSpec("F_tool", "fixed", _NO_AXIS, "flange", "tool", None, (0.0, 0.0), 0.0,
                  translate(seg["flange"], 0, 0)),
    )
    return RigidBodyModel(name="cr6", links=tuple(links), joints=joints, closures=(), tool_frame="tool")


def build_cr4(scale: float, law: ScalingLaw | None = None) -> RigidBodyModel:
    if scale <= 0.0:
        raise ModelError(f"scale must be > 0, got {scale}")
    return apply_scaling(cr4_reference(), scale, law or DEFAULT_LAW)


def build_cr6(scale: float, law: ScalingLaw | None = None) -> RigidBodyModel:
    if scale <= 0.0:
        raise ModelError(f"scale must be > 0, got {scale}")
    return apply_scaling(cr6_reference(), scale, law or DEFAULT_LAW)


def build_robot(kind: str, scale: float, law: ScalingLaw | None = None) -> RigidBodyModel:
    kind = kind.lower()
    if kind == "cr4":
        return build_cr4(scale, law)
    if kind == "cr6":
        return build_cr6(scale, law)
    raise ModelError(f"unknown robot kind {kind!r}")


def reach(model: RigidBodyModel) -> float:
    """Horizontal shoulder-to-tool distance at the (stretched) zero configuration."""
    from .kinematics import forward_kinematics, zero_configuration

    q = zero_configuration(model)
    shoulder = model.actuated_joints[1]
    # world position of the shoulder joint origin at q = 0
    parent_pose = forward_kinematics(model, q, shoulder.parent_link)
    p_shoulder = translation_of(parent_pose @ shoulder.origin)
    p_tool = translation_of(forward_kinematics(model, q, model.tool_frame))
    delta = p_tool - p_shoulder
    return float(np.hypot(delta[0], delta[1]))
