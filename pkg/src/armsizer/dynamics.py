"""Rigid-body dynamics: recursive Newton-Euler, mass matrix, and the
KKT-structured constrained inverse/forward dynamics for loop-closed chains.

The constrained inverse dynamics solves one square linear system in
(qdd, tau_a, lambda):

    M qdd - S^T tau_a - Jc^T lambda = -h      (equations of motion)
    S qdd                           = qdd_a   (actuation tracking)
    Jc qdd                          = -Jcdot qdot  (constraint consistency)

where S selects the actuated block and qdot is closure-consistent. Friction
and rotor inertia are deliberately absent here; they belong to the
motor-side mapping during sizing, which keeps the energy balance of the
rigid-body core exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from dataclasses import replace

from .kinematics import (
    closure_acceleration_bias,
    closure_jacobian_matrix,
    fk_all,
    propagate_motion,
    resolve_passive_rates,
    solve_closure,
)
from .model import JointSpec, Link, LinkInertia, ModelError, RigidBodyModel, combine_inertia
from .transforms import translate

GRAVITY = np.array([0.0, 0.0, -9.81])
KKT_RESIDUAL_FACTOR = 1e-9


class DynamicsError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DynamicsTerms:
    """Mass matrix, full bias vector, and the gravity-only part of the bias."""

    M: np.ndarray
    h: np.ndarray
    g_vec: np.ndarray


@dataclass(frozen=True, eq=False)
class ConstrainedIDResult:
    tau_a: np.ndarray
    lam: np.ndarray
    kkt_residual: float
    qdd: np.ndarray


@dataclass(frozen=True, eq=False)
class TorqueProfile:
    """Per-joint torque trace on a uniform time grid."""

    t: np.ndarray
    tau: np.ndarray  # (k, n_a)
    path: str  # "DEMO" | "PRO"
    motor_side: np.ndarray | None = None
    kkt_residuals: np.ndarray | None = None
    bias_sup: float = 0.0  # max over samples of ||h||_inf, for residual bounds


def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _world_inertia(model: RigidBodyModel, poses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-link world COM positions and world inertia tensors about the COM."""
    tr = model.traversal
    R = poses[:, :3, :3]
    com_w = poses[:, :3, 3] + np.einsum("nij,nj->ni", R, tr.com_stack)
    I_w = np.einsum("nij,njk,nlk->nil", R, tr.inertia_stack, R)
    return com_w, I_w


def _bcross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of (n, 3) arrays without np.cross overhead."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _backward_forces(model: RigidBodyModel, motion,
                     com_w: np.ndarray | None = None,
                     I_w: np.ndarray | None = None) -> np.ndarray:
    """Newton-Euler backward pass over a propagated motion state."""
    poses, omega, alpha, _, a_org = motion
    tr = model.traversal
    if com_w is None:
        com_w, I_w = _world_inertia(model, poses)
    r_c = com_w - poses[:, :3, 3]
    a_c = a_org + _bcross(alpha, r_c) + _bcross(omega, _bcross(omega, r_c))
    F = tr.masses[:, None] * a_c
    N = (np.einsum("nij,nj->ni", I_w, alpha)
         + _bcross(omega, np.einsum("nij,nj->ni", I_w, omega))
         + _bcross(r_c, F))

    tau = np.zeros(model.n)
    for idx in range(len(tr.parent) - 1, -1, -1):
        pi, ci, k = tr.parent[idx], tr.child[idx], tr.coord[idx]
        if k >= 0:
            s_w = poses[ci][:3, :3] @ tr.coord_axis[k]
            tau[k] = float(s_w @ N[ci])
        r = poses[ci][:3, 3] - poses[pi][:3, 3]
        F[pi] += F[ci]
        N[pi] += N[ci] + _cross(r, F[ci])
    return tau


def rnea(model: RigidBodyModel, q, qd, qdd, gravity=GRAVITY) -> np.ndarray:
    """Generalized forces of the open tree: tau = M qdd + h(q, qd) exactly."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    if q.shape != (model.n,) or qd.shape != (model.n,) or qdd.shape != (model.n,):
        raise DynamicsError(f"state vectors must have length n = {model.n}")
    motion = propagate_motion(model, q, qd, qdd, a_root=-np.asarray(gravity, dtype=float))
    return _backward_forces(model, motion)


def gravity_forces(model: RigidBodyModel, q, gravity=GRAVITY) -> np.ndarray:
    zero = np.zeros(model.n)
    return rnea(model, q, zero, zero, gravity)


def bias_forces(model: RigidBodyModel, q, qd, gravity=GRAVITY) -> np.ndarray:
    return rnea(model, q, qd, np.zeros(model.n), gravity)


def mass_matrix(model: RigidBodyModel, q, method: str = "crb") -> np.ndarray:
    """Joint-space mass matrix, composite-rigid-body by default.

    method="rnea" evaluates columns as rnea(q, 0, e_i) with gravity off; the
    two routes agree to roundoff and cross-check each other in the tests.
    """
    q = np.asarray(q, dtype=float)
    if method == "rnea":
        M = np.zeros((model.n, model.n))
        zero = np.zeros(model.n)
        for i in range(model.n):
            e = np.zeros(model.n)
            e[i] = 1.0
            M[:, i] = rnea(model, q, zero, e, gravity=np.zeros(3))
        return M
    if method != "crb":
        raise DynamicsError(f"unknown mass matrix method {method!r}")
    return _mass_matrix_crb(model, fk_all(model, q))


def _shift_term(m: float, r: np.ndarray) -> np.ndarray:
    """m * ((r.r) I - r r^T), the parallel-axis increment."""
    x, y, z = r
    xx, yy, zz = m * x * x, m * y * y, m * z * z
    xy, xz, yz = -m * x * y, -m * x * z, -m * y * z
    return np.array([[yy + zz, xy, xz], [xy, xx + zz, yz], [xz, yz, xx + yy]])


def _mass_matrix_crb(model: RigidBodyModel, poses: np.ndarray,
                     com_w: np.ndarray | None = None,
                     I_w: np.ndarray | None = None) -> np.ndarray:
    tr = model.traversal
    if com_w is None:
        com_w, I_w = _world_inertia(model, poses)
    # composite subtree inertia in world coordinates: (mass, mass*com, I about com)
    c_mass = tr.masses.copy()
    c_mcom = tr.masses[:, None] * com_w
    c_inertia = I_w.copy()
    for idx in range(len(tr.parent) - 1, -1, -1):
        pi, ci = tr.parent[idx], tr.child[idx]
        ma, mb = c_mass[pi], c_mass[ci]
        m = ma + mb
        I_new = c_inertia[pi] + c_inertia[ci]
        if m > 0.0:
            com = (c_mcom[pi] + c_mcom[ci]) / m
            if ma > 0.0:
                I_new = I_new + _shift_term(ma, c_mcom[pi] / ma - com)
            if mb > 0.0:
                I_new = I_new + _shift_term(mb, c_mcom[ci] / mb - com)
        c_inertia[pi] = I_new
        c_mass[pi] = m
        c_mcom[pi] = c_mcom[pi] + c_mcom[ci]

    axis_w = np.zeros((model.n, 3))
    point = np.zeros((model.n, 3))
    for k in range(model.n):
        ci = tr.coord_child[k]
        axis_w[k] = poses[ci][:3, :3] @ tr.coord_axis[k]
        point[k] = poses[ci][:3, 3]

    M = np.zeros((model.n, model.n))
    for j in range(model.n):
        ci = tr.coord_child[j]
        mass = c_mass[ci]
        com = c_mcom[ci] / mass if mass > 0.0 else poses[ci][:3, 3]
        s_j, p_j = axis_w[j], point[j]
        lever = com - p_j
        F = mass * _cross(s_j, lever)
        N = c_inertia[ci] @ s_j + _cross(lever, F)
        for i in tr.chains[ci]:
            M[i, j] = M[j, i] = float(axis_w[i] @ (N + _cross(p_j - point[i], F)))
    return M


def dynamics_terms(model: RigidBodyModel, q, qd, gravity=GRAVITY) -> DynamicsTerms:
    return DynamicsTerms(
        M=mass_matrix(model, q),
        h=bias_forces(model, q, qd, gravity),
        g_vec=gravity_forces(model, q, gravity),
    )


def potential_energy(model: RigidBodyModel, q, gravity=GRAVITY) -> float:
    poses = fk_all(model, q)
    g = np.asarray(gravity, dtype=float)
    v = 0.0
    for i, link in enumerate(model.links):
        com_w = poses[i][:3, 3] + poses[i][:3, :3] @ link.inertia.com
        v -= link.inertia.mass * float(g @ com_w)
    return v


def kinetic_energy(model: RigidBodyModel, q, qd) -> float:
    return 0.5 * float(np.asarray(qd) @ mass_matrix(model, q) @ np.asarray(qd))


# ---------------------------------------------------------------------------
# constrained dynamics


def _selection(model: RigidBodyModel) -> np.ndarray:
    S = np.zeros((model.n_a, model.n))
    S[:, : model.n_a] = np.eye(model.n_a)
    return S


def _solve_refined(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Dense LU solve with one step of iterative refinement; returns residual sup norm."""
    lu, piv = scipy.linalg.lu_factor(A)
    x = scipy.linalg.lu_solve((lu, piv), b)
    r = b - A @ x
    x = x + scipy.linalg.lu_solve((lu, piv), r)
    return x, float(np.max(np.abs(b - A @ x)))


def _constrained_terms(model: RigidBodyModel, q, qd, gravity):
    """M, h, Jc and Jc_dot*qdot from a single motion propagation."""
    motion = propagate_motion(model, q, qd, np.zeros(model.n),
                              a_root=-np.asarray(gravity, dtype=float))
    poses = motion[0]
    com_w, I_w = _world_inertia(model, poses)
    M = _mass_matrix_crb(model, poses, com_w, I_w)
    h = _backward_forces(model, motion, com_w, I_w)
    Jc = closure_jacobian_matrix(model, q, poses)
    # gravity enters a_org uniformly and cancels in the frame differences
    jdqd = closure_acceleration_bias(model, motion)
    return M, h, Jc, jdqd


def constrained_inverse_dynamics(model: RigidBodyModel, q, qd_a, qdd_a,
                                 gravity=GRAVITY) -> ConstrainedIDResult:
    """Actuated torques and constraint impulses for a closure-consistent state."""
    q = np.asarray(q, dtype=float)
    qd_a = np.asarray(qd_a, dtype=float)
    qdd_a = np.asarray(qdd_a, dtype=float)
    n, na = model.n, model.n_a

    if not model.closures:
        qdd = qdd_a.copy()
        tau = rnea(model, q, qd_a, qdd, gravity)
        return ConstrainedIDResult(tau_a=tau, lam=np.zeros(0), kkt_residual=0.0, qdd=qdd)

    qd, _ = resolve_passive_rates(model, q, qd_a, np.zeros(na))
    M, h, Jc, jdqd = _constrained_terms(model, q, qd, gravity)
    m = Jc.shape[0]
    S = _selection(model)

    dim = n + na + m
    A = np.zeros((dim, dim))
    b = np.zeros(dim)
    A[:n, :n] = M
    A[:n, n:n + na] = -S.T
    A[:n, n + na:] = -Jc.T
    b[:n] = -h
    A[n:n + na, :n] = S
    b[n:n + na] = qdd_a
    A[n + na:, :n] = Jc
    b[n + na:] = -jdqd

    try:
        x, residual = _solve_refined(A, b)
    except scipy.linalg.LinAlgError as exc:
        raise DynamicsError(f"rank-deficient KKT system: {exc}") from exc
    return ConstrainedIDResult(
        tau_a=x[n:n + na], lam=x[n + na:], kkt_residual=residual, qdd=x[:n])


def constrained_forward_dynamics(model: RigidBodyModel, q, qd, tau_a,
                                 gravity=GRAVITY) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations and constraint impulses given actuated torques."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    tau_a = np.asarray(tau_a, dtype=float)
    n = model.n
    if not model.closures:
        M = mass_matrix(model, q)
        h = bias_forces(model, q, qd, gravity)
        return np.linalg.solve(M, _selection(model).T @ tau_a - h), np.zeros(0)

    M, h, Jc, jdqd = _constrained_terms(model, q, qd, gravity)
    m = Jc.shape[0]
    A = np.zeros((n + m, n + m))
    A[:n, :n] = M
    A[:n, n:] = -Jc.T
    A[n:, :n] = Jc
    b = np.empty(n + m)
    b[:n] = -h
    b[: model.n_a] += tau_a
    b[n:] = -jdqd
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise DynamicsError(f"singular constrained system: {exc}") from exc
    return x[:n], x[n:]


@dataclass(frozen=True, eq=False)
class RolloutResult:
    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    work: np.ndarray          # integrated actuated power, RK4-consistent
    energy: np.ndarray        # kinetic + potential at each step
    closure_drift: np.ndarray  # ||phi||_inf at each step


def rollout_constrained(model: RigidBodyModel, q0, qd0, tau_fn, dt: float, duration: float,
                        gravity=GRAVITY, project: bool = False,
                        audit_every: int = 50) -> RolloutResult:
    """RK4 rollout of the constrained forward dynamics.

    The actuated work integral rides along inside the RK4 state so the
    energy-balance identity holds to integrator accuracy. With ``project``
    the closure is re-solved and rates re-projected after every step.
    Energy and closure drift are audited every ``audit_every`` steps (the
    audit is several times the cost of a step).
    """
    from .kinematics import closure_residual

    na = model.n_a
    steps = int(round(duration / dt))

    def deriv(q, qd, t):
        qdd, _ = constrained_forward_dynamics(model, q, qd, tau_fn(t), gravity)
        power = float(qd[:na] @ tau_fn(t))
        return qd, qdd, power

    t_hist = np.zeros(steps + 1)
    q_hist = np.zeros((steps + 1, model.n))
    qd_hist = np.zeros((steps + 1, model.n))
    work = np.zeros(steps + 1)
    energy = np.full(steps + 1, np.nan)
    drift = np.full(steps + 1, np.nan)

    q = np.asarray(q0, dtype=float).copy()
    qd = np.asarray(qd0, dtype=float).copy()
    w = 0.0
    for k in range(steps + 1):
        t = k * dt
        t_hist[k] = t
        q_hist[k] = q
        qd_hist[k] = qd
        work[k] = w
        if k % audit_every == 0 or k == steps:
            energy[k] = kinetic_energy(model, q, qd) + potential_energy(model, q, gravity)
            drift[k] = float(np.max(np.abs(closure_residual(model, q)))) if model.closures else 0.0
        if k == steps:
            break

        k1q, k1v, k1w = deriv(q, qd, t)
        k2q, k2v, k2w = deriv(q + 0.5 * dt * k1q, qd + 0.5 * dt * k1v, t + 0.5 * dt)
        k3q, k3v, k3w = deriv(q + 0.5 * dt * k2q, qd + 0.5 * dt * k2v, t + 0.5 * dt)
        k4q, k4v, k4w = deriv(q + dt * k3q, qd + dt * k3v, t + dt)
        q = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        qd = qd + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        w = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)

        if project and model.closures:
            q = solve_closure(model, q[:na], seed=q[na:])
            Jc = closure_jacobian_matrix(model, q)
            qd[na:] = np.linalg.solve(Jc[:, na:], -Jc[:, :na] @ qd[:na])
    return RolloutResult(t_hist, q_hist, qd_hist, work, energy, drift)


# ---------------------------------------------------------------------------
# serial fast path (DEMO)


def lump_serial_model(model_cr4: RigidBodyModel) -> RigidBodyModel:
    """Serial surrogate of the palletizer with the four-bar members lumped.

    The crank/coupler masses are apportioned onto the upper arm (at the
    shoulder pivot) and onto the forearm (at an elevated bracket point)
    such that total mass, the static moment about the shoulder axis at the
    reference pose, and in fact the full static gravity torque field are
    preserved. The elbow coordinate is ground-referenced: q3' = q3 - q2.
    """
    required = {"upper_arm", "forearm", "crank", "coupler", "wrist", "tool", "column", "base"}
    names = {l.name for l in model_cr4.links}
    if not required.issubset(names) or not model_cr4.closures:
        raise ModelError("lump_serial_model expects the parallelogram palletizer topology")

    m_crank = model_cr4.link("crank").inertia.mass
    m_coupler = model_cr4.link("coupler").inertia.mass
    d = float(np.linalg.norm(model_cr4.joint("P2").origin[:3, 3]))
    l2 = float(np.linalg.norm(model_cr4.joint("P1").origin[:3, 3]))
    l3 = float(np.linalg.norm(model_cr4.joint("J4").origin[:3, 3]))

    m_fore = m_coupler / 2.0
    m_upper = m_crank + m_coupler - m_fore
    z_p = d * (m_crank / 2.0 + m_coupler) / m_fore if m_fore > 0.0 else 0.0

    upper = combine_inertia(model_cr4.link("upper_arm").inertia, LinkInertia.point(m_upper))
    fore = combine_inertia(model_cr4.link("forearm").inertia,
                           LinkInertia.point(m_fore, (0.0, 0.0, z_p)))

    links = (
        model_cr4.link("base"),
        model_cr4.link("column"),
        Link("upper_arm", upper),
        Link("forearm", fore),
        model_cr4.link("wrist"),
        model_cr4.link("tool"),
    )
    elbow = JointSpec("J3", "revolute", np.array([0.0, 1.0, 0.0]), "upper_arm", "forearm",
                      "actuated", (-2.8, 2.8), 3.0, translate(l2, 0, 0))
    joints = (
        model_cr4.joint("J1"),
        model_cr4.joint("J2"),
        elbow,
        replace(model_cr4.joint("J4"), origin=translate(l3, 0, 0)),
        model_cr4.joint("F_tool"),
    )
    return RigidBodyModel(
        name=model_cr4.name + "_serial",
        links=links,
        joints=joints,
        closures=(),
        tool_frame="tool",
        scale=model_cr4.scale,
        scaling_law=model_cr4.scaling_law,
    )


def _demo_coord_map(n_a: int) -> np.ndarray:
    """T with q_serial = T @ q_actuated; elbow row is q3' = q3 - q2."""
    T = np.eye(n_a)
    T[2, 1] = -1.0
    return T


def demo_inverse_dynamics(model_demo: RigidBodyModel, q_a, qd_a, qdd_a,
                          gravity=GRAVITY) -> np.ndarray:
    """Plain tree dynamics on the serial surrogate, mapped back to the
    palletizer's actuated coordinates via the transpose coordinate map."""
    q_a = np.asarray(q_a, dtype=float)
    T = _demo_coord_map(len(q_a))
    tau_serial = rnea(model_demo, T @ q_a, T @ np.asarray(qd_a, dtype=float),
                      T @ np.asarray(qdd_a, dtype=float), gravity)
    return T.T @ tau_serial


# ---------------------------------------------------------------------------
# trajectory-level torque profiles


def pro_torque_profile(model: RigidBodyModel, traj, gravity=GRAVITY) -> TorqueProfile:
    """Constraint-consistent inverse dynamics along a sampled trajectory."""
    k = len(traj.t)
    tau = np.zeros((k, model.n_a))
    residuals = np.zeros(k)
    bias_sup = 0.0
    seed = np.zeros(model.n_p) if model.n_p else None
    for i in range(k):
        if model.closures:
            q = solve_closure(model, traj.q_a[i], seed=seed)
            seed = q[model.n_a:]
        else:
            q = traj.q_a[i].copy()
        res = constrained_inverse_dynamics(model, q, traj.qd_a[i], traj.qdd_a[i], gravity)
        tau[i] = res.tau_a
        residuals[i] = res.kkt_residual
        qd, _ = (resolve_passive_rates(model, q, traj.qd_a[i], traj.qdd_a[i])
                 if model.closures else (traj.qd_a[i], None))
        bias_sup = max(bias_sup, float(np.max(np.abs(bias_forces(model, q, qd, gravity)))))
    return TorqueProfile(t=traj.t.copy(), tau=tau, path="PRO",
                         kkt_residuals=residuals, bias_sup=bias_sup)


def demo_torque_profile(model_demo: RigidBodyModel, traj, gravity=GRAVITY) -> TorqueProfile:
    k = len(traj.t)
    tau = np.zeros((k, traj.q_a.shape[1]))
    for i in range(k):
        tau[i] = demo_inverse_dynamics(model_demo, traj.q_a[i], traj.qd_a[i], traj.qdd_a[i], gravity)
    return TorqueProfile(t=traj.t.copy(), tau=tau, path="DEMO")
