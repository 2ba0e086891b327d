import numpy as np
import pytest

from armsizer.dynamics import (
    bias_forces,
    constrained_forward_dynamics,
    constrained_inverse_dynamics,
    demo_inverse_dynamics,
    demo_torque_profile,
    dynamics_terms,
    gravity_forces,
    kinetic_energy,
    lump_serial_model,
    mass_matrix,
    potential_energy,
    pro_torque_profile,
    rnea,
    rollout_constrained,
)
from armsizer.kinematics import solve_closure, zero_configuration
from armsizer.model import (
    JointSpec,
    Link,
    LinkInertia,
    ModelError,
    PayloadSpec,
    RigidBodyModel,
    attach_payload,
    total_mass,
)
from armsizer.transforms import translate

from conftest import random_solved_states

G = 9.81


def pendulum(mass=2.0, length=0.7):
    """Point-mass pendulum about -y so positive q lifts the mass: the
    classic tau = m l^2 qdd + m g l cos(q) form."""
    links = (Link("base", LinkInertia.point(0.0)),
             Link("rod", LinkInertia.point(mass, (length, 0.0, 0.0))))
    joints = (JointSpec("J1", "revolute", np.array([0.0, -1.0, 0.0]), "base", "rod",
                        "actuated", (-10, 10), 10.0, translate(0, 0, 0)),)
    return RigidBodyModel("pendulum", links, joints, (), "rod")


class TestRnea:
    @pytest.mark.parametrize("q,qd,qdd", [(0.3, 0.5, 1.2), (-1.0, 0.0, 0.0), (0.7, -2.0, 3.0)])
    def test_pendulum_closed_form(self, q, qd, qdd):
        m, l = 2.0, 0.7
        tau = rnea(pendulum(m, l), np.array([q]), np.array([qd]), np.array([qdd]))
        assert tau[0] == pytest.approx(m * l * l * qdd + m * G * l * np.cos(q), rel=1e-12)

    def test_zero_state_zero_gravity(self, cr4_unit):
        q = zero_configuration(cr4_unit)
        tau = rnea(cr4_unit, q, np.zeros(6), np.zeros(6), gravity=np.zeros(3))
        np.testing.assert_allclose(tau, np.zeros(6), atol=1e-14)

    def test_mass_matrix_identity(self, cr4_unit):
        rng = np.random.default_rng(5)
        for q in random_solved_states(cr4_unit, 20, seed=5):
            qd = rng.uniform(-1, 1, 6)
            qdd = rng.uniform(-2, 2, 6)
            lhs = rnea(cr4_unit, q, qd, qdd) - rnea(cr4_unit, q, qd, np.zeros(6))
            rhs = mass_matrix(cr4_unit, q) @ qdd
            scale = max(1.0, np.max(np.abs(rhs)))
            np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale)

    def test_dimension_mismatch(self, cr4_unit):
        with pytest.raises(Exception):
            rnea(cr4_unit, np.zeros(4), np.zeros(4), np.zeros(4))


class TestMassMatrix:
    def test_symmetry(self, cr4_unit):
        for q in random_solved_states(cr4_unit, 10, seed=9):
            M = mass_matrix(cr4_unit, q)
            assert np.max(np.abs(M - M.T)) <= 1e-10

    def test_pendulum_point_mass(self):
        M = mass_matrix(pendulum(2.0, 0.7), np.array([0.4]))
        assert M[0, 0] == pytest.approx(2.0 * 0.49, rel=1e-12)

    def test_positive_definite(self, cr4_unit):
        for q in random_solved_states(cr4_unit, 50, seed=13):
            np.linalg.cholesky(mass_matrix(cr4_unit, q))

    def test_crb_equals_rnea_route(self, cr4_unit, cr6_unit):
        for model, seed in ((cr4_unit, 1), (cr6_unit, 2)):
            rng = np.random.default_rng(seed)
            for _ in range(5):
                if model.closures:
                    q = solve_closure(model, rng.uniform(-0.5, 0.5, model.n_a))
                else:
                    q = rng.uniform(-1.0, 1.0, model.n)
                a = mass_matrix(model, q, method="crb")
                b = mass_matrix(model, q, method="rnea")
                assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


class TestConstrainedInverseDynamics:
    def test_serial_reduces_to_rnea(self, cr6_unit):
        rng = np.random.default_rng(21)
        q = rng.uniform(-1, 1, 6)
        qd = rng.uniform(-1, 1, 6)
        qdd = rng.uniform(-1, 1, 6)
        res = constrained_inverse_dynamics(cr6_unit, q, qd, qdd)
        np.testing.assert_allclose(res.tau_a, rnea(cr6_unit, q, qd, qdd), atol=1e-12)
        assert res.lam.size == 0

    def test_static_torques_match_potential_gradient(self, benchmark_model):
        model = benchmark_model
        h = 1e-6
        for q in random_solved_states(model, 20, seed=23):
            res = constrained_inverse_dynamics(model, q, np.zeros(4), np.zeros(4))
            grad = np.zeros(4)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                qp = solve_closure(model, q[:4] + e, seed=q[4:])
                qm = solve_closure(model, q[:4] - e, seed=q[4:])
                grad[i] = (potential_energy(model, qp) - potential_energy(model, qm)) / (2 * h)
            np.testing.assert_allclose(res.tau_a, grad, atol=1e-5)

    def test_constraint_velocity_annihilated(self, cr4_unit):
        from armsizer.kinematics import closure_jacobian

        for q, qd, *_ in random_solved_states(cr4_unit, 5, seed=29, with_rates=True):
            state = closure_jacobian(cr4_unit, q, qd)
            assert np.max(np.abs(state.Jc @ qd)) <= 1e-9

    def test_kkt_residual_bound(self, benchmark_model):
        model = benchmark_model
        for q, qd, qdd, qd_a, qdd_a in random_solved_states(model, 10, seed=31, with_rates=True):
            res = constrained_inverse_dynamics(model, q, qd_a, qdd_a)
            h = bias_forces(model, q, qd)
            assert res.kkt_residual <= 1e-9 * (1.0 + np.max(np.abs(h)))

    def test_unified_kkt_matches_staged_reduction(self, benchmark_model):
        # staged route: resolve full accelerations first, then solve the
        # square [S^T J_c^T] system for torques and multipliers
        model = benchmark_model
        for q, qd, qdd, qd_a, qdd_a in random_solved_states(model, 5, seed=37, with_rates=True):
            res = constrained_inverse_dynamics(model, q, qd_a, qdd_a)
            M = mass_matrix(model, q)
            h = bias_forces(model, q, qd)
            rhs = M @ qdd + h
            from armsizer.kinematics import closure_jacobian

            Jc = closure_jacobian(model, q, qd).Jc
            S = np.zeros((4, 6))
            S[:, :4] = np.eye(4)
            A = np.hstack([S.T, Jc.T])
            x = np.linalg.solve(A, rhs)
            np.testing.assert_allclose(res.tau_a, x[:4], rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(res.lam, x[4:], rtol=1e-9, atol=1e-9)

    def test_static_lambda_negates_with_gravity(self, benchmark_model):
        model = benchmark_model
        q = solve_closure(model, np.array([0.2, 0.7, -0.4, 0.1]))
        up = constrained_inverse_dynamics(model, q, np.zeros(4), np.zeros(4),
                                          gravity=np.array([0, 0, -9.81]))
        down = constrained_inverse_dynamics(model, q, np.zeros(4), np.zeros(4),
                                            gravity=np.array([0, 0, 9.81]))
        np.testing.assert_allclose(down.lam, -up.lam, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(down.tau_a, -up.tau_a, rtol=1e-9, atol=1e-12)


class TestConstrainedForwardDynamics:
    def test_roundtrip(self, benchmark_model):
        model = benchmark_model
        for q, qd, qdd, qd_a, qdd_a in random_solved_states(model, 20, seed=41, with_rates=True):
            res = constrained_inverse_dynamics(model, q, qd_a, qdd_a)
            qdd_fd, lam = constrained_forward_dynamics(model, q, qd, res.tau_a)
            scale = max(1.0, np.max(np.abs(qdd_a)))
            np.testing.assert_allclose(qdd_fd[:4], qdd_a, atol=1e-8 * scale)
            np.testing.assert_allclose(lam, res.lam, rtol=1e-6, atol=1e-8)

    def test_rest_without_forces(self, cr4_unit):
        q = solve_closure(cr4_unit, np.array([0.1, 0.6, -0.4, 0.0]))
        qdd, lam = constrained_forward_dynamics(cr4_unit, q, np.zeros(6), np.zeros(4),
                                                gravity=np.zeros(3))
        np.testing.assert_allclose(qdd, np.zeros(6), atol=1e-12)

    def test_energy_balance_rollout(self, benchmark_model):
        model = benchmark_model
        q0 = solve_closure(model, np.array([0.0, 0.6, -0.4, 0.0]))

        def tau_fn(t):
            return np.array([3.0 * np.sin(2 * np.pi * t), 5.0 * np.cos(2 * np.pi * t),
                             2.0 * np.sin(4 * np.pi * t), 0.2 * np.sin(2 * np.pi * t)])

        r = rollout_constrained(model, q0, np.zeros(6), tau_fn, dt=1e-4, duration=1.0)
        dE = r.energy[-1] - r.energy[0]
        scale = 1.0 + abs(r.energy[0]) + np.nanmax(np.abs(r.energy - r.energy[0]))
        assert abs(dE - r.work[-1]) / scale <= 1e-6

    def test_closure_drift_bounds(self, benchmark_model):
        model = benchmark_model
        q0 = solve_closure(model, np.array([0.0, 0.6, -0.4, 0.0]))

        def tau_fn(t):
            return np.array([2.0 * np.sin(2 * np.pi * t), 4.0 * np.cos(2 * np.pi * t),
                             1.5 * np.sin(4 * np.pi * t), 0.0])

        free = rollout_constrained(model, q0, np.zeros(6), tau_fn, dt=1e-4, duration=1.0,
                                   project=False)
        assert np.nanmax(free.closure_drift) <= 1e-6
        projected = rollout_constrained(model, q0, np.zeros(6), tau_fn, dt=1e-3, duration=0.2,
                                        project=True)
        assert np.nanmax(projected.closure_drift) <= 1e-10


class TestSerialSurrogate:
    def test_total_mass_preserved(self, benchmark_model):
        demo = lump_serial_model(benchmark_model)
        assert total_mass(demo) == pytest.approx(total_mass(benchmark_model), rel=1e-12)

    def test_actuated_count_preserved(self, benchmark_model):
        demo = lump_serial_model(benchmark_model)
        assert demo.n_a == 4
        assert demo.closures == ()

    def test_static_shoulder_torque_identical_at_reference(self, benchmark_model):
        model = benchmark_model
        demo = lump_serial_model(model)
        q = solve_closure(model, np.zeros(4))
        pro = constrained_inverse_dynamics(model, q, np.zeros(4), np.zeros(4)).tau_a
        dem = demo_inverse_dynamics(demo, np.zeros(4), np.zeros(4), np.zeros(4))
        assert dem[1] == pytest.approx(pro[1], abs=1e-9)

    def test_static_equivalence_all_poses(self, benchmark_model):
        model = benchmark_model
        demo = lump_serial_model(model)
        for q in random_solved_states(model, 10, seed=43):
            pro = constrained_inverse_dynamics(model, q, np.zeros(4), np.zeros(4)).tau_a
            dem = demo_inverse_dynamics(demo, q[:4], np.zeros(4), np.zeros(4))
            np.testing.assert_allclose(dem, pro, atol=1e-6)

    def test_zero_state_zero_gravity(self, benchmark_model):
        demo = lump_serial_model(benchmark_model)
        tau = demo_inverse_dynamics(demo, np.zeros(4), np.zeros(4), np.zeros(4),
                                    gravity=np.zeros(3))
        np.testing.assert_allclose(tau, np.zeros(4), atol=1e-12)

    def test_requires_palletizer_topology(self, cr6_unit):
        with pytest.raises(ModelError):
            lump_serial_model(cr6_unit)


class TestDemoVsProPattern:
    def test_correlations(self, benchmark_demo, benchmark_pro):
        for j in range(4):
            d = benchmark_demo.tau[:, j]
            p = benchmark_pro.tau[:, j]
            if np.std(d) < 1e-12 or np.std(p) < 1e-12:
                continue
            corr = np.corrcoef(d, p)[0, 1]
            assert corr >= 0.95, f"J{j+1} correlation {corr}"

    def test_rmse_concentrates_in_coupled_joints(self, benchmark_demo, benchmark_pro):
        rmse = np.sqrt(np.mean((benchmark_demo.tau - benchmark_pro.tau) ** 2, axis=0))
        assert rmse[1] >= rmse[0]
        assert rmse[2] >= rmse[0]

    def test_kkt_residuals_along_cycle(self, benchmark_pro):
        bound = 1e-9 * (1.0 + benchmark_pro.bias_sup)
        assert np.max(benchmark_pro.kkt_residuals) <= bound


class TestDynamicsTerms:
    def test_terms_consistent(self, benchmark_model):
        model = benchmark_model
        for q, qd, *_ in random_solved_states(model, 3, seed=47, with_rates=True):
            terms = dynamics_terms(model, q, qd)
            np.testing.assert_allclose(terms.h, bias_forces(model, q, qd), atol=1e-12)
            np.testing.assert_allclose(terms.g_vec, gravity_forces(model, q), atol=1e-12)
            np.linalg.cholesky(terms.M)

    def test_kinetic_energy_quadratic(self, cr4_unit):
        q = solve_closure(cr4_unit, np.array([0.1, 0.5, -0.3, 0.0]))
        qd = np.array([0.2, -0.4, 0.3, 0.1, 0.05, -0.05])
        assert kinetic_energy(cr4_unit, q, 2 * qd) == pytest.approx(
            4 * kinetic_energy(cr4_unit, q, qd), rel=1e-12)
