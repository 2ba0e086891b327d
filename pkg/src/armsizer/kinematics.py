"""Forward kinematics, Jacobians, loop-closure solving and differential IK.

Coordinates are ordered actuated-first then passive. All Jacobians are
world-aligned. Closure residuals are expressed in frame_a of each closure,
translations first in the order the constrained dofs were declared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelError, RigidBodyModel
from .transforms import invert_transform, rotation_about_axis, skew, so3_log

CLOSURE_TOL = 1e-10
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 20
SINGULAR_CONDITION = 1e12
IK_STEP_CLAMP = 0.2
DEFAULT_DLS_DAMPING = 1e-3
JCDOT_FD_STEP = 1e-6


class KinematicsError(RuntimeError):
    pass


class ClosureConvergenceError(KinematicsError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class Configuration:
    """Full joint vector bound to a model by name."""

    q: np.ndarray
    model_name: str
    checked: bool = False

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))


@dataclass(frozen=True, eq=False)
class ClosureState:
    phi: np.ndarray
    Jc: np.ndarray
    Jc_dot_qdot: np.ndarray


def zero_configuration(model: RigidBodyModel) -> np.ndarray:
    return np.zeros(model.n)


def assemble_full(model: RigidBodyModel, q_a: np.ndarray, q_p: np.ndarray | None = None) -> np.ndarray:
    q = np.zeros(model.n)
    q[: model.n_a] = q_a
    if q_p is not None:
        q[model.n_a:] = q_p
    return q


def check_limits(model: RigidBodyModel, q_a: np.ndarray) -> list[str]:
    lo, hi = model.position_limits()
    out = []
    for i, joint in enumerate(model.actuated_joints):
        if q_a[i] < lo[i] - 1e-12 or q_a[i] > hi[i] + 1e-12:
            out.append(f"{joint.name}: {q_a[i]:.4f} rad outside [{lo[i]:.4f}, {hi[i]:.4f}]")
    return out


def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def fk_all(model: RigidBodyModel, q: np.ndarray) -> np.ndarray:
    """World pose of every link, indexed like model.links."""
    if len(q) != model.n:
        raise KinematicsError(f"configuration length {len(q)} != n = {model.n}")
    tr = model.traversal
    poses = np.zeros((len(model.links), 4, 4))
    poses[tr.root] = np.eye(4)
    for pi, ci, k, origin, axis in zip(tr.parent, tr.child, tr.coord, tr.origins, tr.axes):
        T = poses[pi] @ origin
        if k >= 0:
            T[:3, :3] = T[:3, :3] @ rotation_about_axis(axis, q[k])
        poses[ci] = T
    return poses


def propagate_motion(model: RigidBodyModel, q, qd, qdd, a_root=(0.0, 0.0, 0.0)):
    """Pose, angular velocity/acceleration and origin velocity/acceleration
    of every link. Setting a_root = -gravity folds gravity into the
    accelerations (the usual trick for dynamics passes). 3-vector algebra is
    unrolled to scalars: this sits inside the integrator hot loop."""
    tr = model.traversal
    nl = len(model.links)
    poses = np.zeros((nl, 4, 4))
    omega = np.zeros((nl, 3))
    alpha = np.zeros((nl, 3))
    v_org = np.zeros((nl, 3))
    a_org = np.zeros((nl, 3))
    poses[tr.root] = np.eye(4)
    a_org[tr.root] = a_root
    for pi, ci, k, origin, axis in zip(tr.parent, tr.child, tr.coord, tr.origins, tr.axes):
        Tp = poses[pi]
        T = Tp @ origin
        rx = T[0, 3] - Tp[0, 3]
        ry = T[1, 3] - Tp[1, 3]
        rz = T[2, 3] - Tp[2, 3]
        wx, wy, wz = omega[pi]
        ax, ay, az = alpha[pi]
        # v_j = v_p + w x r ; a_j = a_p + al x r + w x (w x r)
        cx, cy, cz = wy * rz - wz * ry, wz * rx - wx * rz, wx * ry - wy * rx
        v_org[ci, 0] = v_org[pi, 0] + cx
        v_org[ci, 1] = v_org[pi, 1] + cy
        v_org[ci, 2] = v_org[pi, 2] + cz
        a_org[ci, 0] = a_org[pi, 0] + ay * rz - az * ry + wy * cz - wz * cy
        a_org[ci, 1] = a_org[pi, 1] + az * rx - ax * rz + wz * cx - wx * cz
        a_org[ci, 2] = a_org[pi, 2] + ax * ry - ay * rx + wx * cy - wy * cx
        if k >= 0:
            R = T[:3, :3]
            sx = R[0, 0] * axis[0] + R[0, 1] * axis[1] + R[0, 2] * axis[2]
            sy = R[1, 0] * axis[0] + R[1, 1] * axis[1] + R[1, 2] * axis[2]
            sz = R[2, 0] * axis[0] + R[2, 1] * axis[1] + R[2, 2] * axis[2]
            dq, ddq = qd[k], qdd[k]
            omega[ci, 0] = wx + sx * dq
            omega[ci, 1] = wy + sy * dq
            omega[ci, 2] = wz + sz * dq
            alpha[ci, 0] = ax + sx * ddq + (wy * sz - wz * sy) * dq
            alpha[ci, 1] = ay + sy * ddq + (wz * sx - wx * sz) * dq
            alpha[ci, 2] = az + sz * ddq + (wx * sy - wy * sx) * dq
            T[:3, :3] = R @ rotation_about_axis(axis, q[k])
        else:
            omega[ci] = omega[pi]
            alpha[ci] = alpha[pi]
        poses[ci] = T
    return poses, omega, alpha, v_org, a_org


def forward_kinematics(model: RigidBodyModel, q: np.ndarray, frame: str) -> np.ndarray:
    idx = model.link_index(frame)
    return fk_all(model, q)[idx]


def support_path(model: RigidBodyModel, frame: str) -> list[str]:
    """Names of the revolute joints between the root and the frame."""
    tr = model.traversal
    chain = tr.chains[model.link_index(frame)]
    names = {model.coordinate_index(j.name): j.name for j in model.joints if j.kind == "revolute"}
    return [names[k] for k in chain]


def frame_jacobian(model: RigidBodyModel, q: np.ndarray, frame: str,
                   poses: np.ndarray | None = None) -> np.ndarray:
    """6 x n world Jacobian of a frame: linear rows then angular rows."""
    if poses is None:
        poses = fk_all(model, q)
    tr = model.traversal
    p_frame = poses[model.link_index(frame)][:3, 3]
    J = np.zeros((6, model.n))
    for k in tr.chains[model.link_index(frame)]:
        T_joint = poses[tr.coord_child[k]]
        axis_w = T_joint[:3, :3] @ tr.coord_axis[k]
        J[:3, k] = _cross(axis_w, p_frame - T_joint[:3, 3])
        J[3:, k] = axis_w
    return J


# ---------------------------------------------------------------------------
# loop closure

_TRANS_IDX = {"x": 0, "y": 1, "z": 2}
_ROT_IDX = {"rx": 0, "ry": 1, "rz": 2}


def closure_residual(model: RigidBodyModel, q: np.ndarray, poses: np.ndarray | None = None) -> np.ndarray:
    """Signed frame_a-to-frame_b gaps, expressed in frame_a, per constrained dof."""
    if not model.closures:
        raise ModelError(f"model {model.name!r} has no loop closures")
    if poses is None:
        poses = fk_all(model, q)
    parts = []
    for c in model.closures:
        T_a = poses[model.link_index(c.frame_a)]
        T_b = poses[model.link_index(c.frame_b)]
        rel = invert_transform(T_a) @ T_b
        trans = rel[:3, 3]
        rot = None
        for dof in c.constrained_dofs:
            if dof in _TRANS_IDX:
                parts.append(trans[_TRANS_IDX[dof]])
            else:
                if rot is None:
                    rot = so3_log(rel[:3, :3])
                parts.append(rot[_ROT_IDX[dof]])
    return np.array(parts)


def closure_jacobian_matrix(model: RigidBodyModel, q: np.ndarray,
                            poses: np.ndarray | None = None) -> np.ndarray:
    """m x n Jacobian of the closure residual (analytic, from frame Jacobians)."""
    if poses is None:
        poses = fk_all(model, q)
    rows = []
    for c in model.closures:
        T_a = poses[model.link_index(c.frame_a)]
        T_b = poses[model.link_index(c.frame_b)]
        R_aT = T_a[:3, :3].T
        J_a = frame_jacobian(model, q, c.frame_a, poses)
        J_b = frame_jacobian(model, q, c.frame_b, poses)
        dp = T_b[:3, 3] - T_a[:3, 3]
        # d/dt [R_a^T (p_b - p_a)] = R_a^T (v_b - v_a - w_a x (p_b - p_a))
        Jt = R_aT @ (J_b[:3] - J_a[:3] + skew(dp) @ J_a[3:])
        Jr = R_aT @ (J_b[3:] - J_a[3:])
        for dof in c.constrained_dofs:
            if dof in _TRANS_IDX:
                rows.append(Jt[_TRANS_IDX[dof]])
            else:
                rows.append(Jr[_ROT_IDX[dof]])
    return np.array(rows)


def closure_acceleration_bias(model: RigidBodyModel, motion) -> np.ndarray:
    """Jc_dot * qdot: the closure acceleration at zero joint acceleration.

    Exact (velocity-product) form; equals the time-domain finite difference
    of Jc within O(h). ``motion`` is a propagate_motion result whose alpha
    and a_org were produced with qdd = 0 (any uniform a_root cancels in the
    frame-to-frame differences).
    """
    poses, omega, alpha, v_org, a_org = motion
    rows = []
    for c in model.closures:
        ia, ib = model.link_index(c.frame_a), model.link_index(c.frame_b)
        R_aT = poses[ia][:3, :3].T
        dp = poses[ib][:3, 3] - poses[ia][:3, 3]
        dv = v_org[ib] - v_org[ia]
        w_a, al_a = omega[ia], alpha[ia]
        u = dv - _cross(w_a, dp)
        trans = -R_aT @ _cross(w_a, u) + R_aT @ (
            a_org[ib] - a_org[ia] - _cross(al_a, dp) - _cross(w_a, dv))
        dw = omega[ib] - omega[ia]
        rot = None
        for dof in c.constrained_dofs:
            if dof in _TRANS_IDX:
                rows.append(trans[_TRANS_IDX[dof]])
            else:
                if rot is None:
                    rot = -R_aT @ _cross(w_a, dw) + R_aT @ (alpha[ib] - alpha[ia])
                rows.append(rot[_ROT_IDX[dof]])
    return np.array(rows)


def closure_jacobian_fd_qdot(model: RigidBodyModel, q: np.ndarray, qd: np.ndarray,
                             h: float = JCDOT_FD_STEP) -> np.ndarray:
    """Time-domain central finite difference of Jc applied to qdot (reference
    implementation; the analytic velocity-product form is the default)."""
    Jp = closure_jacobian_matrix(model, q + h * qd)
    Jm = closure_jacobian_matrix(model, q - h * qd)
    return (Jp - Jm) @ qd / (2.0 * h)


def closure_jacobian(model: RigidBodyModel, q: np.ndarray, qd: np.ndarray | None = None) -> ClosureState:
    """Residual, its Jacobian, and the Jc_dot * qdot bias term."""
    poses = fk_all(model, q)
    phi = closure_residual(model, q, poses)
    Jc = closure_jacobian_matrix(model, q, poses)
    if qd is None or not np.any(qd):
        jdqd = np.zeros(len(phi))
    else:
        motion = propagate_motion(model, q, qd, np.zeros(model.n))
        jdqd = closure_acceleration_bias(model, motion)
    return ClosureState(phi=phi, Jc=Jc, Jc_dot_qdot=jdqd)


def solve_closure(model: RigidBodyModel, q_a: np.ndarray, seed: np.ndarray | None = None) -> np.ndarray:
    """Damped Newton on the passive block until the closure residual vanishes."""
    m = model.closure_dim
    if m != model.n_p:
        raise ModelError(f"closure is not square: m = {m}, passive = {model.n_p}")
    q = assemble_full(model, q_a, seed if seed is not None else np.zeros(model.n_p))
    na = model.n_a

    phi = closure_residual(model, q)
    norm = float(np.max(np.abs(phi)))
    for _ in range(NEWTON_MAX_ITER):
        Jc_p = closure_jacobian_matrix(model, q)[:, na:]
        cond = np.linalg.cond(Jc_p)
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise ClosureConvergenceError(
                f"singular passive closure Jacobian (cond {cond:.2e})", norm)
        if norm <= CLOSURE_TOL:
            # one polish step: quadratic convergence takes the residual to
            # roundoff so downstream rates/poses don't inherit solver noise
            q[na:] -= np.linalg.solve(Jc_p, phi)
            return q
        step = np.linalg.solve(Jc_p, phi)
        scale = 1.0
        for _ in range(NEWTON_MAX_HALVINGS):
            q_try = q.copy()
            q_try[na:] -= scale * step
            phi_try = closure_residual(model, q_try)
            norm_try = float(np.max(np.abs(phi_try)))
            if norm_try < norm:
                q, phi, norm = q_try, phi_try, norm_try
                break
            scale *= 0.5
        else:
            raise ClosureConvergenceError("closure line search stalled", norm)
    if norm <= CLOSURE_TOL:
        return q
    raise ClosureConvergenceError(
        f"closure Newton did not converge in {NEWTON_MAX_ITER} iterations", norm)


def resolve_passive_rates(model: RigidBodyModel, q: np.ndarray, qd_a: np.ndarray,
                          qdd_a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Passive velocities/accelerations consistent with the closure constraint."""
    na = model.n_a
    if model.n_p == 0:
        qd = np.asarray(qd_a, dtype=float).copy()
        qdd = np.asarray(qdd_a, dtype=float).copy()
        return qd, qdd
    Jc = closure_jacobian_matrix(model, q)
    Jc_a, Jc_p = Jc[:, :na], Jc[:, na:]
    cond = np.linalg.cond(Jc_p)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise KinematicsError(f"singular passive closure Jacobian (cond {cond:.2e})")
    qd = assemble_full(model, qd_a, np.linalg.solve(Jc_p, -Jc_a @ qd_a))
    jdqd = closure_jacobian(model, q, qd).Jc_dot_qdot
    qdd = assemble_full(model, qdd_a, np.linalg.solve(Jc_p, -(Jc_a @ qdd_a) - jdqd))
    return qd, qdd


# ---------------------------------------------------------------------------
# differential IK


def pose_error(target: np.ndarray, current: np.ndarray, position_only: bool) -> np.ndarray:
    err_p = target[:3, 3] - current[:3, 3]
    if position_only:
        return err_p
    err_r = so3_log(target[:3, :3] @ current[:3, :3].T)
    return np.concatenate([err_p, err_r])


def ik_step(model: RigidBodyModel, q: np.ndarray, target: np.ndarray, frame: str | None = None,
            damping: float = DEFAULT_DLS_DAMPING, position_only: bool | None = None,
            locked: np.ndarray | None = None) -> np.ndarray:
    """One damped-least-squares step on the actuated block, then closure re-solve.

    ``locked`` masks actuated joints that must not move (the wrist yaw is
    steered separately on the palletizer). Step norm is clamped to 0.2 rad.
    """
    frame = frame or model.tool_frame
    if position_only is None:
        position_only = bool(model.closures)
    na = model.n_a
    poses = fk_all(model, q)
    current = poses[model.link_index(frame)]
    err = pose_error(target, current, position_only)

    J = frame_jacobian(model, q, frame, poses)
    if position_only:
        J = J[:3]
    if model.n_p:
        Jc = closure_jacobian_matrix(model, q, poses)
        Jc_a, Jc_p = Jc[:, :na], Jc[:, na:]
        coupling = -np.linalg.solve(Jc_p, Jc_a)
        B = np.vstack([np.eye(na), coupling])
    else:
        B = np.eye(na)
    J_eff = J @ B
    if locked is not None:
        J_eff = J_eff.copy()
        J_eff[:, locked] = 0.0

    JJt = J_eff @ J_eff.T + (damping**2) * np.eye(J_eff.shape[0])
    dq_a = J_eff.T @ np.linalg.solve(JJt, err)
    norm = np.linalg.norm(dq_a)
    if norm > IK_STEP_CLAMP:
        dq_a *= IK_STEP_CLAMP / norm

    # backtrack on the pose error so a step never overshoots near singularities
    err_norm = np.linalg.norm(err)
    scale = 1.0
    best = None
    for _ in range(10):
        q_a_new = q[:na] + scale * dq_a
        q_new = solve_closure(model, q_a_new, seed=q[na:]) if model.n_p else assemble_full(model, q_a_new)
        new_err = pose_error(target, forward_kinematics(model, q_new, frame), position_only)
        if np.linalg.norm(new_err) < err_norm:
            return q_new
        if best is None:
            best = q_new
        scale *= 0.5
    return best


def ik_solve(model: RigidBodyModel, q: np.ndarray, target: np.ndarray, frame: str | None = None,
             damping: float = DEFAULT_DLS_DAMPING, position_only: bool | None = None,
             locked: np.ndarray | None = None, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Iterate ik_step to convergence; raises if the target cannot be reached."""
    frame = frame or model.tool_frame
    if position_only is None:
        position_only = bool(model.closures)
    for _ in range(max_iter):
        current = forward_kinematics(model, q, frame)
        err = pose_error(target, current, position_only)
        if np.linalg.norm(err[:3]) <= tol and (position_only or np.linalg.norm(err[3:]) <= 10 * tol):
            return q
        q = ik_step(model, q, target, frame, damping, position_only, locked)
    err = pose_error(target, forward_kinematics(model, q, frame), position_only)
    raise KinematicsError(
        f"IK did not converge: position error {np.linalg.norm(err[:3]):.3e} m after {max_iter} steps")
