"""Waypoint programs to uniformly sampled joint trajectories.

Point-to-point motion with trapezoidal speed profiles and zero-velocity
junctions. MoveJ synchronizes all joints to the slowest joint by time-
stretching (velocity / k, acceleration / k^2, shape preserved). MoveL runs
the tool along a straight line with a trapezoidal path-speed profile and
converts to joint space by iterated differential IK.

Sampled velocities and accelerations are central differences of the sampled
positions (endpoints at rest), which keeps the discrete triple
(q, qd, qdd) self-consistent under trapezoidal re-integration.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .kinematics import (
    KinematicsError,
    check_limits,
    fk_all,
    forward_kinematics,
    ik_solve,
    solve_closure,
)
from .model import RigidBodyModel
from .transforms import make_transform, quat_to_rotation, rotation_to_quat

DEFAULT_DT = 0.004
DEFAULT_SAMPLE_DS = 0.002


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Waypoint:
    kind: str  # "joint" | "cartesian"
    joint_target: np.ndarray | None = None
    pose_target: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "joint":
            if self.joint_target is None or self.pose_target is not None:
                raise TrajectoryError("joint waypoint needs exactly joint_target")
            object.__setattr__(self, "joint_target", np.asarray(self.joint_target, dtype=float))
        elif self.kind == "cartesian":
            if self.pose_target is None or self.joint_target is not None:
                raise TrajectoryError("cartesian waypoint needs exactly pose_target")
            object.__setattr__(self, "pose_target", np.asarray(self.pose_target, dtype=float))
        else:
            raise TrajectoryError(f"unknown waypoint kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class MotionPrimitive:
    kind: str  # "MoveJ" | "MoveL"
    target: Waypoint
    vmax: np.ndarray | float
    amax: np.ndarray | float

    def __post_init__(self):
        if self.kind not in ("MoveJ", "MoveL"):
            raise TrajectoryError(f"unknown primitive kind {self.kind!r}")
        if np.any(np.asarray(self.vmax) <= 0.0) or np.any(np.asarray(self.amax) <= 0.0):
            raise TrajectoryError("vmax and amax must be > 0")


@dataclass(frozen=True, eq=False)
class TrajectorySamples:
    dt: float
    t: np.ndarray
    q_a: np.ndarray
    qd_a: np.ndarray
    qdd_a: np.ndarray
    primitive_boundaries: tuple[int, ...] = ()

    @property
    def duration(self) -> float:
        return float(self.t[-1]) if len(self.t) else 0.0


# ---------------------------------------------------------------------------
# scalar trapezoid


@dataclass(frozen=True)
class TrapezoidProfile:
    """Bang-cruise-bang profile over a non-negative distance."""

    distance: float
    t_accel: float
    t_cruise: float
    accel: float
    v_peak: float

    @property
    def duration(self) -> float:
        return 2.0 * self.t_accel + self.t_cruise

    def stretched(self, factor: float) -> "TrapezoidProfile":
        """Same distance over duration * factor, shape preserved."""
        if factor <= 1.0 + 1e-15:
            return self
        return TrapezoidProfile(
            distance=self.distance,
            t_accel=self.t_accel * factor,
            t_cruise=self.t_cruise * factor,
            accel=self.accel / factor**2,
            v_peak=self.v_peak / factor,
        )

    def eval(self, t):
        """Position, speed, acceleration along the path at time(s) t."""
        t = np.asarray(t, dtype=float)
        s = np.empty_like(t)
        sd = np.zeros_like(t)
        sdd = np.zeros_like(t)
        ta, tc, a, v, T = self.t_accel, self.t_cruise, self.accel, self.v_peak, self.duration
        rise = (t >= 0) & (t < ta)
        cruise = (t >= ta) & (t < ta + tc)
        fall = (t >= ta + tc) & (t < T)
        s[t < 0] = 0.0
        s[t >= T] = self.distance
        s[rise] = 0.5 * a * t[rise] ** 2
        sd[rise] = a * t[rise]
        sdd[rise] = a
        s[cruise] = 0.5 * a * ta**2 + v * (t[cruise] - ta)
        sd[cruise] = v
        rem = T - t[fall]
        s[fall] = self.distance - 0.5 * a * rem**2
        sd[fall] = a * rem
        sdd[fall] = -a
        return s, sd, sdd


def trapezoid_profile(distance: float, vmax: float, amax: float) -> TrapezoidProfile:
    """Time-optimal trapezoid (triangular when too short to reach vmax)."""
    if distance < 0.0:
        raise TrajectoryError(f"distance must be >= 0, got {distance}")
    if vmax <= 0.0 or amax <= 0.0:
        raise TrajectoryError("vmax and amax must be > 0")
    if distance == 0.0:
        return TrapezoidProfile(0.0, 0.0, 0.0, 0.0, 0.0)
    if distance < vmax**2 / amax:
        t_accel = np.sqrt(distance / amax)
        return TrapezoidProfile(distance, float(t_accel), 0.0, amax, float(amax * t_accel))
    t_accel = vmax / amax
    t_cruise = distance / vmax - vmax / amax
    return TrapezoidProfile(distance, t_accel, t_cruise, amax, vmax)


# ---------------------------------------------------------------------------
# segments (analytic descriptions sampled on the global grid)


@dataclass(frozen=True, eq=False)
class _Segment:
    duration: float  # exact profile duration; rounded up to the grid when sampled
    q_end: np.ndarray

    def positions(self, t_local: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class _JointSegment(_Segment):
    q_start: np.ndarray = None
    profiles: tuple[TrapezoidProfile, ...] = ()
    signs: np.ndarray = None

    def positions(self, t_local: np.ndarray) -> np.ndarray:
        out = np.empty((len(t_local), len(self.q_start)))
        for j, prof in enumerate(self.profiles):
            s, _, _ = prof.eval(t_local)
            out[:, j] = self.q_start[j] + self.signs[j] * s
        return out


@dataclass(frozen=True, eq=False)
class _PathSegment(_Segment):
    profile: TrapezoidProfile = None
    spline: CubicSpline = None  # q_a as a function of arc length

    def positions(self, t_local: np.ndarray) -> np.ndarray:
        s, _, _ = self.profile.eval(t_local)
        return self.spline(np.clip(s, 0.0, self.profile.distance))


def _broadcast(v, n: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise TrajectoryError(f"expected scalar or {n} per-joint values, got shape {arr.shape}")
    return arr


def _plan_joint_segment(model: RigidBodyModel, q_from: np.ndarray,
                        primitive: MotionPrimitive) -> _JointSegment:
    n_a = model.n_a
    target = primitive.target.joint_target
    if target is None:
        raise TrajectoryError("MoveJ needs a joint waypoint")
    if target.shape != (n_a,):
        raise TrajectoryError(f"joint target must have {n_a} entries")
    violations = check_limits(model, target)
    if violations:
        raise TrajectoryError("MoveJ target violates joint limits: " + "; ".join(violations))
    vmax = _broadcast(primitive.vmax, n_a)
    amax = _broadcast(primitive.amax, n_a)
    delta = target - q_from
    profiles = [trapezoid_profile(abs(d), v, a) for d, v, a in zip(delta, vmax, amax)]
    T = max(p.duration for p in profiles)
    if T > 0.0:
        profiles = [p.stretched(T / p.duration) if p.duration > 0.0 else p for p in profiles]
    return _JointSegment(duration=T, q_end=target.copy(), q_start=q_from.copy(),
                         profiles=tuple(profiles), signs=np.sign(delta))


def _plan_path_segment(model: RigidBodyModel, q_from: np.ndarray, primitive: MotionPrimitive,
                       sample_ds: float = DEFAULT_SAMPLE_DS) -> _PathSegment:
    if primitive.target.pose_target is None:
        raise TrajectoryError("MoveL needs a cartesian waypoint")
    n_a = model.n_a
    q_full = solve_closure(model, q_from) if model.closures else np.asarray(q_from, dtype=float)
    start_pose = forward_kinematics(model, q_full, model.tool_frame)
    p0 = start_pose[:3, 3]
    p1 = primitive.target.pose_target[:3, 3]
    dist = float(np.linalg.norm(p1 - p0))
    if dist < 1e-12:
        return _PathSegment(duration=0.0, q_end=np.asarray(q_from, dtype=float).copy(),
                            profile=trapezoid_profile(0.0, 1.0, 1.0), spline=None)

    # wrist yaw is steered separately; hold it during the line
    locked = np.zeros(n_a, dtype=bool)
    locked[-1] = bool(model.closures)
    n_stations = max(2, int(np.ceil(dist / sample_ds)) + 1)
    s_grid = np.linspace(0.0, dist, n_stations)
    stations = np.empty((n_stations, n_a))
    q_cur = q_full
    for i, s in enumerate(s_grid):
        target = make_transform(start_pose[:3, :3], p0 + (p1 - p0) * (s / dist))
        try:
            q_cur = ik_solve(model, q_cur, target, position_only=True,
                             locked=locked if model.closures else None, tol=1e-8)
        except KinematicsError as exc:
            raise TrajectoryError(f"MoveL IK failed at station {i} (s = {s:.4f} m): {exc}") from exc
        stations[i] = q_cur[:n_a]
    profile = trapezoid_profile(dist, float(primitive.vmax), float(primitive.amax))
    spline = CubicSpline(s_grid, stations, axis=0)
    return _PathSegment(duration=profile.duration, q_end=stations[-1].copy(),
                        profile=profile, spline=spline)


def _differentiate(q: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference velocity/acceleration with at-rest endpoints."""
    k = len(q)
    qd = np.zeros_like(q)
    qdd = np.zeros_like(q)
    if k >= 3:
        qd[1:-1] = (q[2:] - q[:-2]) / (2.0 * dt)
        qdd[1:-1] = (qd[2:] - qd[:-2]) / (2.0 * dt)
        qdd[0] = (qd[1] - qd[0]) / dt
        qdd[-1] = (qd[-1] - qd[-2]) / dt
    return qd, qdd


def _sample_segments(model: RigidBodyModel, start_q: np.ndarray, segments: list[_Segment],
                     dt: float) -> TrajectorySamples:
    rows = [np.asarray(start_q, dtype=float).copy()]
    boundaries = [0]
    for seg in segments:
        n_steps = max(1, int(np.ceil(seg.duration / dt - 1e-9))) if seg.duration > 0.0 else 0
        if n_steps:
            t_local = (np.arange(1, n_steps + 1)) * dt
            qs = seg.positions(np.minimum(t_local, seg.duration))
            qs[-1] = seg.q_end  # grid rounding never drifts the endpoint
            rows.extend(qs)
        boundaries.append(len(rows) - 1)
    q = np.vstack(rows)
    qd, qdd = _differentiate(q, dt)
    t = np.arange(len(q)) * dt
    return TrajectorySamples(dt=dt, t=t, q_a=q, qd_a=qd, qdd_a=qdd,
                             primitive_boundaries=tuple(boundaries))


def plan_movej(model: RigidBodyModel, q_from, primitive: MotionPrimitive,
               dt: float = DEFAULT_DT) -> TrajectorySamples:
    """One synchronized point-to-point joint move, sampled at dt."""
    q_from = np.asarray(q_from, dtype=float)
    seg = _plan_joint_segment(model, q_from, primitive)
    return _sample_segments(model, q_from, [seg], dt)


def plan_movel(model: RigidBodyModel, q_from, primitive: MotionPrimitive,
               sample_ds: float = DEFAULT_SAMPLE_DS, dt: float = DEFAULT_DT) -> TrajectorySamples:
    """Straight-line tool move with a trapezoidal path-speed profile."""
    q_from = np.asarray(q_from, dtype=float)
    seg = _plan_path_segment(model, q_from, primitive, sample_ds)
    traj = _sample_segments(model, q_from, [seg], dt)
    _check_velocity_limits(model, traj)
    return traj


def _check_velocity_limits(model: RigidBodyModel, traj: TrajectorySamples):
    limits = model.velocity_limits()
    over = np.abs(traj.qd_a) - limits[None, :]
    worst = np.unravel_index(np.argmax(over), over.shape)
    if over[worst] > 1e-9:
        raise TrajectoryError(
            f"joint velocity limit exceeded: joint {worst[1] + 1} at sample {worst[0]} "
            f"(t = {traj.t[worst[0]]:.4f} s): |qd| = {abs(traj.qd_a[worst]):.4f} "
            f"> {limits[worst[1]]:.4f} rad/s")


def compile_program(model: RigidBodyModel, start_q, primitives: list[MotionPrimitive],
                    dt: float = DEFAULT_DT,
                    sample_ds: float = DEFAULT_SAMPLE_DS) -> TrajectorySamples:
    """Concatenate primitives into one uniformly sampled trajectory."""
    if dt <= 0.0:
        raise TrajectoryError(f"dt must be > 0, got {dt}")
    if not primitives:
        raise TrajectoryError("program has no primitives")
    start_q = np.asarray(start_q, dtype=float)
    if start_q.shape != (model.n_a,):
        raise TrajectoryError(f"start_q must have {model.n_a} entries")
    segments = []
    q_cur = start_q
    for prim in primitives:
        if prim.kind == "MoveJ":
            seg = _plan_joint_segment(model, q_cur, prim)
        else:
            seg = _plan_path_segment(model, q_cur, prim, sample_ds)
        segments.append(seg)
        q_cur = seg.q_end
    traj = _sample_segments(model, start_q, segments, dt)
    _check_velocity_limits(model, traj)
    return traj


# ---------------------------------------------------------------------------
# program and trajectory documents


def program_to_document(start_q, primitives: list[MotionPrimitive], dt: float) -> dict:
    prims = []
    for p in primitives:
        if p.target.kind == "joint":
            target = {"kind": "joint", "q": [float(v) for v in p.target.joint_target]}
        else:
            pose = p.target.pose_target
            target = {
                "kind": "cartesian",
                "xyz": [float(v) for v in pose[:3, 3]],
                "quat_wxyz": [float(v) for v in rotation_to_quat(pose[:3, :3])],
            }
        vm, am = np.asarray(p.vmax), np.asarray(p.amax)
        prims.append({
            "kind": p.kind,
            "target": target,
            "vmax": [float(v) for v in vm] if vm.ndim else float(vm),
            "amax": [float(v) for v in am] if am.ndim else float(am),
        })
    return {"start_q": [float(v) for v in start_q], "primitives": prims, "dt": float(dt)}


def program_from_document(doc: dict) -> tuple[np.ndarray, list[MotionPrimitive], float]:
    start_q = np.asarray(doc["start_q"], dtype=float)
    prims = []
    for p in doc["primitives"]:
        t = p["target"]
        if t["kind"] == "joint":
            wp = Waypoint("joint", joint_target=np.asarray(t["q"], dtype=float))
        else:
            pose = make_transform(quat_to_rotation(np.asarray(t["quat_wxyz"])), t["xyz"])
            wp = Waypoint("cartesian", pose_target=pose)
        prims.append(MotionPrimitive(p["kind"], wp, p["vmax"], p["amax"]))
    return start_q, prims, float(doc.get("dt", DEFAULT_DT))


def trajectory_to_csv(traj: TrajectorySamples) -> str:
    """CSV with header t,q1..qn,qd1..,qdd1.. ; floats use repr for exact round-trips."""
    n = traj.q_a.shape[1]
    header = (["t"] + [f"q{i+1}" for i in range(n)] + [f"qd{i+1}" for i in range(n)]
              + [f"qdd{i+1}" for i in range(n)])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for k in range(len(traj.t)):
        row = [repr(float(traj.t[k]))]
        row += [repr(float(v)) for v in traj.q_a[k]]
        row += [repr(float(v)) for v in traj.qd_a[k]]
        row += [repr(float(v)) for v in traj.qdd_a[k]]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def trajectory_from_csv(text: str) -> TrajectorySamples:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    n = (len(header) - 1) // 3
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    t = data[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else DEFAULT_DT
    return TrajectorySamples(dt=dt, t=t, q_a=data[:, 1:1 + n],
                             qd_a=data[:, 1 + n:1 + 2 * n], qdd_a=data[:, 1 + 2 * n:1 + 3 * n])


def trajectory_manifest(traj: TrajectorySamples, start_q, primitives: list[MotionPrimitive],
                        dt: float) -> dict:
    """Generation settings sidecar stored next to the sampled trajectory."""
    doc = program_to_document(start_q, primitives, dt)
    return {
        "dt": float(dt),
        "samples": int(len(traj.t)),
        "duration_s": float(traj.duration),
        "primitive_boundaries": [int(i) for i in traj.primitive_boundaries],
        "start_q": doc["start_q"],
        "waypoints": [p["target"] for p in doc["primitives"]],
        "limits": [{"kind": p["kind"], "vmax": p["vmax"], "amax": p["amax"]}
                   for p in doc["primitives"]],
    }
