import numpy as np
import pytest

from armsizer.dynamics import demo_torque_profile, lump_serial_model, pro_torque_profile
from armsizer.fixtures import benchmark_program, benchmark_scenario, scenario_model
from armsizer.robots import build_cr4, build_cr6
from armsizer.trajectory import compile_program


@pytest.fixture(scope="session")
def cr4_unit():
    return build_cr4(1.0)


@pytest.fixture(scope="session")
def cr6_unit():
    return build_cr6(1.0)


@pytest.fixture(scope="session")
def scenario():
    return benchmark_scenario()


@pytest.fixture(scope="session")
def benchmark_model(scenario):
    return scenario_model(scenario)


@pytest.fixture(scope="session")
def benchmark_traj(benchmark_model):
    start_q, prims, dt = benchmark_program(benchmark_model)
    return compile_program(benchmark_model, start_q, prims, dt=dt)


@pytest.fixture(scope="session")
def benchmark_pro(benchmark_model, benchmark_traj, scenario):
    return pro_torque_profile(benchmark_model, benchmark_traj, scenario.gravity)


@pytest.fixture(scope="session")
def benchmark_demo(benchmark_model, benchmark_traj, scenario):
    demo_model = lump_serial_model(benchmark_model)
    return demo_torque_profile(demo_model, benchmark_traj, scenario.gravity)


def random_solved_states(model, count, span=0.5, seed=0, with_rates=False):
    """Closure-consistent random states inside the comfortable working range.

    Samples keep |q2 - q3| well away from the four-bar fold and seed the
    closure solve from the parallelogram branch (the solver's contract is
    branch-tracking by warm start, not global branch search).
    """
    from armsizer.kinematics import resolve_passive_rates, solve_closure
    from armsizer.robots import cr4_passive_solution

    rng = np.random.default_rng(seed)
    out = []
    center = np.array([0.0, 0.6, -0.4, 0.0])
    while len(out) < count:
        q_a = center + rng.uniform(-span, span, model.n_a)
        if abs(q_a[1] - q_a[2]) > 1.3:
            continue
        try:
            q = solve_closure(model, q_a, seed=cr4_passive_solution(q_a))
        except Exception:
            continue
        if with_rates:
            qd_a = rng.uniform(-1.0, 1.0, model.n_a)
            qdd_a = rng.uniform(-2.0, 2.0, model.n_a)
            qd, qdd = resolve_passive_rates(model, q, qd_a, qdd_a)
            out.append((q, qd, qdd, qd_a, qdd_a))
        else:
            out.append(q)
    return out
