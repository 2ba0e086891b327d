"""Rigid-body model data structures and model-level operations.

A model is a tree of links connected by revolute or fixed joints, plus an
optional set of loop closures that weld pairs of link frames together in a
subset of their relative degrees of freedom. Joint coordinates are ordered
actuated-first, passive-second; fixed joints carry no coordinate. All values
are SI. Models are immutable: every mutation-style operation returns a new
model and leaves its input untouched.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .transforms import make_transform, quat_to_rotation, rotation_to_quat

AXIS_UNIT_TOL = 1e-12
MODEL_DOC_VERSION = 1

CLOSURE_DOF_NAMES = ("x", "y", "z", "rx", "ry", "rz")


class ModelError(ValueError):
    """Invalid model construction or mutation request."""


@dataclass(frozen=True, eq=False)
class LinkInertia:
    """Mass, COM offset (link frame) and 3x3 inertia tensor about the COM."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))

    @staticmethod
    def point(mass: float, com=(0.0, 0.0, 0.0)) -> "LinkInertia":
        return LinkInertia(mass, np.asarray(com, dtype=float), np.zeros((3, 3)))


def rod_inertia(mass: float, length: float, radius: float, axis: str = "x") -> np.ndarray:
    """Inertia tensor of a uniform solid cylinder about its COM, long axis given."""
    longitudinal = 0.5 * mass * radius**2
    transverse = mass * (3.0 * radius**2 + length**2) / 12.0
    diag = {"x": (longitudinal, transverse, transverse),
            "y": (transverse, longitudinal, transverse),
            "z": (transverse, transverse, longitudinal)}[axis]
    return np.diag(diag)


@dataclass(frozen=True, eq=False)
class Link:
    name: str
    inertia: LinkInertia


@dataclass(frozen=True, eq=False)
class JointSpec:
    name: str
    kind: str  # "revolute" | "fixed"
    axis: np.ndarray
    parent_link: str
    child_link: str
    role: str | None  # "actuated" | "passive" | None for fixed joints
    position_limits: tuple[float, float]
    velocity_limit: float
    origin: np.ndarray  # 4x4 transform from parent frame

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))


@dataclass(frozen=True, eq=False)
class LoopClosureSpec:
    """Welds frame_b to frame_a in the named relative dofs (expressed in frame_a)."""

    frame_a: str
    frame_b: str
    constrained_dofs: tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.constrained_dofs)


@dataclass(frozen=True)
class ScalingLaw:
    """Geometric-similarity exponents: lengths ~ s, masses ~ s^alpha, inertias ~ s^beta."""

    mass_exponent: float = 3.0
    inertia_exponent: float = 5.0
    length_exponent: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mass_exponent) and np.isfinite(self.inertia_exponent)
                and np.isfinite(self.length_exponent)):
            raise ModelError("scaling exponents must be finite")
        if self.mass_exponent > self.inertia_exponent:
            raise ModelError("mass exponent must not exceed inertia exponent")


@dataclass(frozen=True, eq=False)
class PayloadSpec:
    mass: float
    com_offset: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float))
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.ndim == 1:
            inertia = np.diag(inertia)
        object.__setattr__(self, "inertia", inertia)
        for violation in _inertia_violations("payload", LinkInertia(self.mass, self.com_offset, inertia)):
            raise ModelError(violation)


@dataclass(frozen=True, eq=False)
class FrictionParams:
    """Motor-side friction: viscous [N*m*s/rad] and Coulomb [N*m]."""

    viscous: float = 0.0
    coulomb: float = 0.0

    def __post_init__(self):
        if self.viscous < 0.0 or self.coulomb < 0.0:
            raise ModelError("friction coefficients must be >= 0")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    scale: float = 1.0
    scaling_law: ScalingLaw = field(default_factory=ScalingLaw)
    payload: PayloadSpec | None = None
    friction: tuple[FrictionParams, ...] = ()
    rotor_reflection: tuple[float, ...] = ()
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))
        if self.scale <= 0.0:
            raise ModelError("scenario scale must be > 0")

    def friction_for(self, n_a: int) -> tuple[FrictionParams, ...]:
        if not self.friction:
            return tuple(FrictionParams() for _ in range(n_a))
        if len(self.friction) != n_a:
            raise ModelError(f"expected {n_a} per-joint friction entries, got {len(self.friction)}")
        return self.friction


@dataclass(frozen=True, eq=False)
class Traversal:
    """Flattened tree structure for the kinematics/dynamics recursions.

    Arrays are indexed by joint order; coord is -1 for fixed joints. Chains
    list the coordinate indices (root to leaf) supporting each link.
    """

    root: int
    parent: tuple[int, ...]
    child: tuple[int, ...]
    coord: tuple[int, ...]
    origins: tuple[np.ndarray, ...]
    axes: tuple[np.ndarray, ...]
    chains: tuple[tuple[int, ...], ...]  # per link: supporting coordinate indices
    coord_child: tuple[int, ...]  # per coordinate: child link index
    coord_axis: tuple[np.ndarray, ...]  # per coordinate: local axis
    masses: np.ndarray
    coms: tuple[np.ndarray, ...]
    inertias: tuple[np.ndarray, ...]
    com_stack: np.ndarray
    inertia_stack: np.ndarray


def _build_traversal(model: "RigidBodyModel", link_index: dict, coord_index: dict) -> Traversal:
    children = {j.child_link for j in model.joints}
    roots = [l.name for l in model.links if l.name not in children]
    if len(roots) != 1:
        raise ModelError("model must have exactly one root")
    n = len(coord_index)
    parent, child, coord, origins, axes = [], [], [], [], []
    chains: dict[int, tuple[int, ...]] = {link_index[roots[0]]: ()}
    coord_child = [0] * n
    coord_axis: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for j in model.joints:
        pi, ci = link_index[j.parent_link], link_index[j.child_link]
        k = coord_index[j.name] if j.kind == "revolute" else -1
        parent.append(pi)
        child.append(ci)
        coord.append(k)
        origins.append(np.ascontiguousarray(j.origin))
        axes.append(np.ascontiguousarray(j.axis))
        if pi not in chains:
            raise ModelError("joint list is not topological")
        chains[ci] = chains[pi] + ((k,) if k >= 0 else ())
        if k >= 0:
            coord_child[k] = ci
            coord_axis[k] = np.ascontiguousarray(j.axis)
    if len(chains) != len(model.links):
        raise ModelError("disconnected links")
    return Traversal(
        root=link_index[roots[0]],
        parent=tuple(parent),
        child=tuple(child),
        coord=tuple(coord),
        origins=tuple(origins),
        axes=tuple(axes),
        chains=tuple(chains[i] for i in range(len(model.links))),
        coord_child=tuple(coord_child),
        coord_axis=tuple(coord_axis),
        masses=np.array([l.inertia.mass for l in model.links]),
        coms=tuple(np.ascontiguousarray(l.inertia.com) for l in model.links),
        inertias=tuple(np.ascontiguousarray(l.inertia.inertia) for l in model.links),
        com_stack=np.ascontiguousarray([l.inertia.com for l in model.links]),
        inertia_stack=np.ascontiguousarray([l.inertia.inertia for l in model.links]),
    )


@dataclass(frozen=True, eq=False)
class RigidBodyModel:
    """Immutable kinematic/inertial description of one manipulator."""

    name: str
    links: tuple[Link, ...]
    joints: tuple[JointSpec, ...]
    closures: tuple[LoopClosureSpec, ...]
    tool_frame: str
    scale: float = 1.0
    scaling_law: ScalingLaw = field(default_factory=ScalingLaw)

    def __post_init__(self):
        link_index = {link.name: i for i, link in enumerate(self.links)}
        coord_joints = [j for j in self.joints if j.kind == "revolute"]
        actuated = [j for j in coord_joints if j.role == "actuated"]
        passive = [j for j in coord_joints if j.role == "passive"]
        coord_index: dict[str, int] = {}
        for i, j in enumerate(actuated):
            coord_index[j.name] = i
        for i, j in enumerate(passive):
            coord_index[j.name] = len(actuated) + i
        object.__setattr__(self, "_link_index", link_index)
        object.__setattr__(self, "_coord_index", coord_index)
        object.__setattr__(self, "_actuated", tuple(actuated))
        object.__setattr__(self, "_passive", tuple(passive))
        try:
            object.__setattr__(self, "_traversal", _build_traversal(self, link_index, coord_index))
        except Exception:
            # malformed models stay constructible so validate_model can report
            object.__setattr__(self, "_traversal", None)

    @property
    def traversal(self) -> "Traversal":
        if self._traversal is None:
            raise ModelError(f"model {self.name!r} is structurally invalid: "
                             + "; ".join(validate_model(self)))
        return self._traversal

    @property
    def n_a(self) -> int:
        return len(self._actuated)

    @property
    def n_p(self) -> int:
        return len(self._passive)

    @property
    def n(self) -> int:
        return self.n_a + self.n_p

    @property
    def actuated_joints(self) -> tuple[JointSpec, ...]:
        return self._actuated

    @property
    def passive_joints(self) -> tuple[JointSpec, ...]:
        return self._passive

    @property
    def closure_dim(self) -> int:
        return sum(c.m for c in self.closures)

    def link_index(self, name: str) -> int:
        try:
            return self._link_index[name]
        except KeyError:
            raise ModelError(f"unknown frame {name!r}") from None

    def link(self, name: str) -> Link:
        return self.links[self.link_index(name)]

    def coordinate_index(self, joint_name: str) -> int:
        return self._coord_index[joint_name]

    def joint(self, name: str) -> JointSpec:
        for j in self.joints:
            if j.name == name:
                return j
        raise ModelError(f"unknown joint {name!r}")

    def root_link(self) -> str:
        children = {j.child_link for j in self.joints}
        roots = [link.name for link in self.links if link.name not in children]
        if len(roots) != 1:
            raise ModelError(f"model must have exactly one root link, found {roots}")
        return roots[0]

    def with_links(self, links: tuple[Link, ...], name: str | None = None) -> "RigidBodyModel":
        return replace(self, links=links, name=name or self.name)

    def velocity_limits(self) -> np.ndarray:
        return np.array([j.velocity_limit for j in self._actuated])

    def position_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.position_limits[0] for j in self._actuated])
        hi = np.array([j.position_limits[1] for j in self._actuated])
        return lo, hi

    def document_hash(self) -> str:
        payload = json.dumps(to_document(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


# ---------------------------------------------------------------------------
# validation


def _inertia_violations(label: str, inertia: LinkInertia) -> list[str]:
    out = []
    if inertia.mass < 0.0:
        out.append(f"{label}: mass {inertia.mass} < 0")
    I = inertia.inertia
    if I.shape != (3, 3):
        out.append(f"{label}: inertia must be 3x3")
        return out
    if np.max(np.abs(I - I.T)) > 1e-9 * max(1.0, np.max(np.abs(I))):
        out.append(f"{label}: inertia tensor not symmetric")
        return out
    w = np.linalg.eigvalsh((I + I.T) / 2.0)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -tol:
        out.append(f"{label}: negative principal moment {w[0]:.3e}")
    if w[0] + w[1] < w[2] - tol:
        out.append(f"{label}: principal moments violate the triangle inequality")
    return out


def validate_model(model: RigidBodyModel) -> list[str]:
    """All invariant violations as human-readable strings; empty means valid."""
    out: list[str] = []
    names = set()
    for link in model.links:
        if link.name in names:
            out.append(f"duplicate link name {link.name!r}")
        names.add(link.name)
        out.extend(_inertia_violations(f"link {link.name!r}", link.inertia))

    seen_children: set[str] = set()
    for j in model.joints:
        if j.kind not in ("revolute", "fixed"):
            out.append(f"joint {j.name!r}: unknown kind {j.kind!r}")
        if j.kind == "revolute":
            if abs(np.linalg.norm(j.axis) - 1.0) > AXIS_UNIT_TOL:
                out.append(f"joint {j.name!r}: axis is not unit norm")
            if j.role not in ("actuated", "passive"):
                out.append(f"joint {j.name!r}: revolute joints need an actuated/passive role")
            lo, hi = j.position_limits
            if lo > hi:
                out.append(f"joint {j.name!r}: lower limit exceeds upper limit")
        if j.parent_link not in model._link_index:
            out.append(f"joint {j.name!r}: unknown parent link {j.parent_link!r}")
        if j.child_link not in model._link_index:
            out.append(f"joint {j.name!r}: unknown child link {j.child_link!r}")
        if j.child_link in seen_children:
            out.append(f"link {j.child_link!r} has more than one parent joint")
        seen_children.add(j.child_link)

    try:
        root = model.root_link()
    except ModelError as exc:
        out.append(str(exc))
        root = None

    if root is not None:
        # joints must be listed topologically: each parent link defined before use
        defined = {root}
        for j in model.joints:
            if j.parent_link not in defined and j.parent_link in model._link_index:
                out.append(f"joint {j.name!r}: parent {j.parent_link!r} appears after its use "
                           "(joint list is not topological)")
            defined.add(j.child_link)
        for link in model.links:
            if link.name not in defined:
                out.append(f"link {link.name!r} is not connected to the root")

    for c in model.closures:
        if c.frame_a == c.frame_b:
            out.append(f"closure {c.frame_a!r}: frame_a equals frame_b")
        for frame in (c.frame_a, c.frame_b):
            if frame not in model._link_index:
                out.append(f"closure references missing frame {frame!r}")
        if c.m < 1:
            out.append(f"closure {c.frame_a!r}->{c.frame_b!r}: needs at least one constrained dof")
        for dof in c.constrained_dofs:
            if dof not in CLOSURE_DOF_NAMES:
                out.append(f"closure dof {dof!r} unknown")
    if model.closures and model.closure_dim != model.n_p:
        out.append(
            f"closure dimension {model.closure_dim} does not match passive joint count {model.n_p}"
        )
    if model.tool_frame not in model._link_index:
        out.append(f"tool frame {model.tool_frame!r} missing")
    return out


# ---------------------------------------------------------------------------
# scaling and composition


def apply_scaling(model_ref: RigidBodyModel, s: float, law: ScalingLaw | None = None) -> RigidBodyModel:
    """Scale a unit-scale reference model: lengths x s, masses x s^alpha, inertias x s^beta."""
    if s <= 0.0:
        raise ModelError(f"scale must be > 0, got {s}")
    law = law or model_ref.scaling_law
    ls = s**law.length_exponent
    ms = s**law.mass_exponent
    js = s**law.inertia_exponent

    links = tuple(
        Link(l.name, LinkInertia(l.inertia.mass * ms, l.inertia.com * ls, l.inertia.inertia * js))
        for l in model_ref.links
    )
    joints = []
    for j in model_ref.joints:
        origin = j.origin.copy()
        origin[:3, 3] *= ls
        joints.append(replace(j, origin=origin))
    return replace(model_ref, links=links, joints=tuple(joints), scale=model_ref.scale * s, scaling_law=law)


def combine_inertia(a: LinkInertia, b: LinkInertia) -> LinkInertia:
    """Composite of two bodies expressed in the same frame (parallel-axis sum)."""
    mass = a.mass + b.mass
    if mass == 0.0:
        return LinkInertia(0.0, np.zeros(3), a.inertia + b.inertia)
    com = (a.mass * a.com + b.mass * b.com) / mass

    def shifted(part: LinkInertia) -> np.ndarray:
        r = part.com - com
        return part.inertia + part.mass * (float(r @ r) * np.eye(3) - np.outer(r, r))

    return LinkInertia(mass, com, shifted(a) + shifted(b))


def attach_payload(model: RigidBodyModel, payload: PayloadSpec) -> RigidBodyModel:
    """Merge a payload body into the tool link (value semantics)."""
    idx = model.link_index(model.tool_frame)
    tool = model.links[idx]
    extra = LinkInertia(payload.mass, payload.com_offset, payload.inertia)
    merged = Link(tool.name, combine_inertia(tool.inertia, extra))
    links = model.links[:idx] + (merged,) + model.links[idx + 1:]
    return model.with_links(links)


def attach_actuator_masses(model: RigidBodyModel, masses) -> RigidBodyModel:
    """Add each actuator's mass as a point mass at its joint origin on the parent link."""
    masses = np.asarray(masses, dtype=float)
    if masses.shape != (model.n_a,):
        raise ModelError(f"expected {model.n_a} actuator masses, got shape {masses.shape}")
    if np.any(masses < 0.0):
        raise ModelError("actuator masses must be >= 0")
    links = list(model.links)
    for joint, mass in zip(model.actuated_joints, masses):
        if mass == 0.0:
            continue
        idx = model.link_index(joint.parent_link)
        point = LinkInertia.point(float(mass), joint.origin[:3, 3])
        links[idx] = Link(links[idx].name, combine_inertia(links[idx].inertia, point))
    return model.with_links(tuple(links))


def total_mass(model: RigidBodyModel) -> float:
    return float(sum(l.inertia.mass for l in model.links))


# ---------------------------------------------------------------------------
# serialization


def to_document(model: RigidBodyModel) -> dict:
    def transform_doc(T: np.ndarray) -> dict:
        return {
            "xyz": [float(v) for v in T[:3, 3]],
            "quat_wxyz": [float(v) for v in rotation_to_quat(T[:3, :3])],
        }

    return {
        "version": MODEL_DOC_VERSION,
        "name": model.name,
        "links": [
            {
                "name": l.name,
                "mass": float(l.inertia.mass),
                "com": [float(v) for v in l.inertia.com],
                "inertia": [[float(v) for v in row] for row in l.inertia.inertia],
            }
            for l in model.links
        ],
        "joints": [
            {
                "name": j.name,
                "kind": j.kind,
                "axis": [float(v) for v in j.axis],
                "parent": j.parent_link,
                "child": j.child_link,
                "role": j.role,
                "position_limits": [float(j.position_limits[0]), float(j.position_limits[1])],
                "velocity_limit": float(j.velocity_limit),
                "origin": transform_doc(j.origin),
            }
            for j in model.joints
        ],
        "closures": [
            {"frame_a": c.frame_a, "frame_b": c.frame_b, "constrained_dofs": list(c.constrained_dofs)}
            for c in model.closures
        ],
        "tool_frame": model.tool_frame,
        "meta": {
            "scale": float(model.scale),
            "scaling_law": {
                "mass_exponent": model.scaling_law.mass_exponent,
                "inertia_exponent": model.scaling_law.inertia_exponent,
                "length_exponent": model.scaling_law.length_exponent,
            },
        },
    }


def from_document(doc: dict) -> RigidBodyModel:
    if doc.get("version") != MODEL_DOC_VERSION:
        raise ModelError(f"unsupported model document version {doc.get('version')!r}")
    links = tuple(
        Link(d["name"], LinkInertia(d["mass"], np.array(d["com"]), np.array(d["inertia"])))
        for d in doc["links"]
    )
    joints = []
    for d in doc["joints"]:
        origin = make_transform(quat_to_rotation(np.array(d["origin"]["quat_wxyz"])), d["origin"]["xyz"])
        joints.append(
            JointSpec(
                name=d["name"],
                kind=d["kind"],
                axis=np.array(d["axis"]),
                parent_link=d["parent"],
                child_link=d["child"],
                role=d["role"],
                position_limits=(d["position_limits"][0], d["position_limits"][1]),
                velocity_limit=d["velocity_limit"],
                origin=origin,
            )
        )
    closures = tuple(
        LoopClosureSpec(d["frame_a"], d["frame_b"], tuple(d["constrained_dofs"])) for d in doc["closures"]
    )
    law = ScalingLaw(
        mass_exponent=doc["meta"]["scaling_law"]["mass_exponent"],
        inertia_exponent=doc["meta"]["scaling_law"]["inertia_exponent"],
        length_exponent=doc["meta"]["scaling_law"].get("length_exponent", 1.0),
    )
    return RigidBodyModel(
        name=doc.get("name", "model"),
        links=links,
        joints=tuple(joints),
        closures=closures,
        tool_frame=doc["tool_frame"],
        scale=doc["meta"]["scale"],
        scaling_law=law,
    )


def model_copy(model: RigidBodyModel) -> RigidBodyModel:
    return copy.deepcopy(model)
