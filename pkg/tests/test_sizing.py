import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armsizer.dynamics import TorqueProfile, pro_torque_profile
from armsizer.fixtures import load_benchmark_catalog_document
from armsizer.model import FrictionParams
from armsizer.sizing import (
    ActuatorCatalog,
    Gearbox,
    InfeasibleSelection,
    JointRequirements,
    Motor,
    SizingConfig,
    SizingError,
    catalog_to_document,
    catalog_to_json,
    extract_requirements,
    load_catalog,
    load_catalog_csv,
    motor_side_torque,
    radps_to_rpm,
    select_round1,
    validate_round2,
)
from armsizer.trajectory import TrajectorySamples


def make_traj(tau, dt=0.01, qd=None, qdd=None):
    tau = np.atleast_2d(np.asarray(tau, dtype=float).T).T
    k, n = tau.shape
    t = np.arange(k) * dt
    qd = np.zeros((k, n)) if qd is None else qd
    qdd = np.zeros((k, n)) if qdd is None else qdd
    traj = TrajectorySamples(dt=dt, t=t, q_a=np.zeros((k, n)), qd_a=qd, qdd_a=qdd)
    profile = TorqueProfile(t=t, tau=tau, path="PRO")
    return profile, traj


MOTOR = Motor("M", rated_torque=2.0, peak_torque=6.0, rated_speed=3000, max_speed=4000,
              rotor_inertia=1e-4, mass=2.0, rated_power=600)
GEARBOX = Gearbox("G", ratio=100.0, rated_output_torque=300, peak_output_torque=600,
                  efficiency=1.0, mass=5.0, max_input_speed=6000)


class TestUnitConversion:
    def test_paper_values(self):
        assert radps_to_rpm(1.200) == pytest.approx(11.460, abs=0.002)
        assert radps_to_rpm(1.066) == pytest.approx(10.180, abs=0.001)

    def test_zero(self):
        assert radps_to_rpm(0.0) == 0.0


class TestMotorSideTorque:
    def test_pure_ratio(self):
        g = Gearbox("G", 100.0, 300, 600, 1.0, 5.0, 6000)
        assert motor_side_torque(100.0, 0.0, 0.0, g, MOTOR, FrictionParams()) == pytest.approx(1.0)

    def test_driving_efficiency(self):
        g = Gearbox("G", 100.0, 300, 600, 0.9, 5.0, 6000)
        out = motor_side_torque(100.0, 1.0, 0.0, g, MOTOR, FrictionParams())
        assert out == pytest.approx(100.0 / 90.0, rel=1e-9)

    def test_rotor_inertia_term(self):
        g = Gearbox("G", 100.0, 300, 600, 0.9, 5.0, 6000)
        base = motor_side_torque(100.0, 1.0, 0.0, g, MOTOR, FrictionParams())
        with_acc = motor_side_torque(100.0, 1.0, 2.0, g, MOTOR, FrictionParams())
        assert with_acc - base == pytest.approx(1e-4 * 100.0 * 2.0, rel=1e-12)

    def test_backdriving_efficiency_helps(self):
        g = Gearbox("G", 100.0, 300, 600, 0.9, 5.0, 6000)
        driving = motor_side_torque(100.0, 1.0, 0.0, g, MOTOR, FrictionParams())
        backdriving = motor_side_torque(100.0, -1.0, 0.0, g, MOTOR, FrictionParams())
        assert backdriving == pytest.approx(100.0 * 0.9 / 100.0, rel=1e-9)
        assert abs(backdriving) < abs(driving)

    def test_friction_terms(self):
        g = Gearbox("G", 50.0, 300, 600, 1.0, 5.0, 6000)
        fr = FrictionParams(viscous=0.01, coulomb=0.2)
        out = motor_side_torque(0.0, 0.5, 0.0, g, MOTOR, fr)
        assert out == pytest.approx(0.01 * 25.0 + 0.2, rel=1e-12)
        assert motor_side_torque(0.0, 0.0, 0.0, g, MOTOR, fr) == 0.0  # sgn(0) = 0

    @settings(max_examples=100, deadline=None)
    @given(tau=st.floats(-500, 500), qd=st.floats(-3, 3), qdd=st.floats(-10, 10))
    def test_odd_symmetry_without_coulomb(self, tau, qd, qdd):
        g = Gearbox("G", 80.0, 300, 600, 0.85, 5.0, 6000)
        fr = FrictionParams(viscous=0.01, coulomb=0.0)
        a = motor_side_torque(tau, qd, qdd, g, MOTOR, fr)
        b = motor_side_torque(-tau, -qd, -qdd, g, MOTOR, fr)
        assert b == pytest.approx(-a, rel=1e-12, abs=1e-12)


class TestExtractRequirements:
    def test_constant_trace(self):
        profile, traj = make_traj(np.full((11, 1), 7.0))
        (req,) = extract_requirements(profile, traj)
        assert req.peak_torque == pytest.approx(7.0)
        assert req.rms_torque == pytest.approx(7.0)

    def test_two_level_trace_hand_quadrature(self):
        profile, traj = make_traj(np.array([[3.0], [3.0], [4.0], [4.0]]))
        (req,) = extract_requirements(profile, traj)
        assert req.rms_torque == pytest.approx(np.sqrt(12.5), rel=1e-12)
        assert req.peak_torque == pytest.approx(4.0)

    def test_stationary_joint_zero_speed(self, benchmark_pro, benchmark_traj):
        reqs = extract_requirements(benchmark_pro, benchmark_traj)
        assert reqs[3].peak_speed == 0.0
        assert reqs[3].peak_speed_rpm == 0.0

    def test_rms_never_exceeds_peak(self, benchmark_pro, benchmark_traj):
        for req in extract_requirements(benchmark_pro, benchmark_traj):
            assert req.rms_torque <= req.peak_torque + 1e-12

    def test_empty_profile_rejected(self):
        profile, traj = make_traj(np.zeros((0, 1)))
        with pytest.raises(SizingError):
            extract_requirements(profile, traj)


def single_pair_catalog():
    return ActuatorCatalog(motors=(MOTOR,), gearboxes=(GEARBOX,))


class TestSelectRound1:
    def test_single_feasible_pair(self):
        reqs = (JointRequirements(peak_torque=200.0, rms_torque=100.0, peak_speed=1.0),)
        sel = select_round1(reqs, single_pair_catalog(), SizingConfig())
        assert sel.joints[0].motor == "M"
        assert sel.joints[0].gearbox == "G"
        assert sel.round == 1

    def test_speed_infeasibility_named(self):
        reqs = (JointRequirements(peak_torque=10.0, rms_torque=5.0, peak_speed=40.0),)
        with pytest.raises(InfeasibleSelection) as err:
            select_round1(reqs, single_pair_catalog(), SizingConfig())
        assert err.value.reason == "speed"

    def test_torque_infeasibility_named(self):
        reqs = (JointRequirements(peak_torque=9000.0, rms_torque=5000.0, peak_speed=0.1),)
        with pytest.raises(InfeasibleSelection) as err:
            select_round1(reqs, single_pair_catalog(), SizingConfig())
        assert "torque" in err.value.reason

    def test_winner_prefers_low_power_then_mass(self):
        m_small = Motor("small", 1.0, 3.0, 3000, 4000, 1e-4, 1.0, 200)
        m_big = Motor("big", 5.0, 15.0, 3000, 4000, 1e-4, 5.0, 1000)
        g_light = Gearbox("light", 50.0, 100, 200, 1.0, 2.0, 6000)
        g_heavy = Gearbox("heavy", 50.0, 100, 200, 1.0, 4.0, 6000)
        cat = ActuatorCatalog(motors=(m_big, m_small), gearboxes=(g_heavy, g_light))
        reqs = (JointRequirements(peak_torque=20.0, rms_torque=10.0, peak_speed=0.5),)
        sel = select_round1(reqs, cat, SizingConfig())
        assert sel.joints[0].motor == "small"
        assert sel.joints[0].gearbox == "light"

    def test_monotone_in_safety_factor(self, benchmark_pro, benchmark_traj, scenario):
        catalog = load_catalog(load_benchmark_catalog_document())
        reqs = extract_requirements(benchmark_pro, benchmark_traj)
        friction = scenario.friction_for(4)
        powers = []
        for sf in (1.1, 1.5, 1.9):
            sel = select_round1(reqs, catalog, SizingConfig(sf_torque=sf), profile=benchmark_pro,
                                trajectory=benchmark_traj, friction=friction)
            powers.append([catalog.motor(s.motor).rated_power for s in sel.joints])
        for a, b in zip(powers, powers[1:]):
            assert all(x <= y for x, y in zip(a, b))


class TestBenchmarkSelection:
    @pytest.fixture(scope="class")
    def rounds(self, benchmark_model, benchmark_traj, benchmark_pro, scenario):
        catalog = load_catalog(load_benchmark_catalog_document())
        reqs = extract_requirements(benchmark_pro, benchmark_traj)
        r1 = select_round1(reqs, catalog, SizingConfig(), profile=benchmark_pro,
                           trajectory=benchmark_traj, friction=scenario.friction_for(4))
        r2, loaded = validate_round2(r1, benchmark_model, benchmark_traj, catalog,
                                     SizingConfig(), scenario)
        return r1, r2

    def test_round1_rows(self, rounds):
        r1, _ = rounds
        picks = {s.joint: (s.motor, s.gearbox) for s in r1.joints}
        assert picks["J1"] == ("AC_400W_2500", "ZXS20_50")
        assert picks["J2"] == ("AC_2_3kW_1500", "ZXS40_100")
        assert picks["J3"] == ("AC_1000W_2500", "ZXS40_100")
        assert picks["J4"] == ("AC_200W_3000", "ZXS14_30")

    def test_round2_upgrades_only_j1(self, rounds):
        r1, r2 = rounds
        picks = {s.joint: (s.motor, s.gearbox) for s in r2.joints}
        assert picks["J1"] == ("AC_600W_2500", "ZXS20_100")
        assert picks["J2"] == ("AC_2_3kW_1500", "ZXS40_100")
        assert picks["J3"] == ("AC_1000W_2500", "ZXS40_100")
        assert picks["J4"] == ("AC_200W_3000", "ZXS14_30")
        changed = {s.joint for s in r2.joints if s.changed}
        assert changed == {"J1"}

    def test_fixed_point_within_two_iterations(self, rounds):
        _, r2 = rounds
        assert r2.iterations <= 2

    def test_round2_idempotent(self, rounds, benchmark_model, benchmark_traj, scenario):
        _, r2 = rounds
        catalog = load_catalog(load_benchmark_catalog_document())
        r3, _ = validate_round2(r2, benchmark_model, benchmark_traj, catalog,
                                SizingConfig(), scenario)
        assert r3.iterations == 1
        for a, b in zip(r2.joints, r3.joints):
            assert (a.motor, a.gearbox) == (b.motor, b.gearbox)

    def test_zero_mass_catalog_keeps_round1(self, benchmark_model, benchmark_traj,
                                            benchmark_pro, scenario):
        doc = load_benchmark_catalog_document()
        for row in doc["motors"]:
            row["mass_kg"] = 1e-9
        for row in doc["gearboxes"]:
            row["mass_kg"] = 1e-9
        catalog = load_catalog(doc)
        reqs = extract_requirements(benchmark_pro, benchmark_traj)
        r1 = select_round1(reqs, catalog, SizingConfig(), profile=benchmark_pro,
                           trajectory=benchmark_traj, friction=scenario.friction_for(4))
        r2, _ = validate_round2(r1, benchmark_model, benchmark_traj, catalog,
                                SizingConfig(), scenario)
        assert r2.iterations == 1
        for a, b in zip(r1.joints, r2.joints):
            assert (a.motor, a.gearbox) == (b.motor, b.gearbox)
            assert not b.changed


class TestScaleMonotonicity:
    def test_peak_j2_requirement_increases_with_scale(self, scenario):
        from armsizer.fixtures import benchmark_program
        from armsizer.model import attach_payload
        from armsizer.robots import build_cr4
        from armsizer.trajectory import compile_program

        peaks = []
        for s in (1.0, 1.3, 1.6):
            model = build_cr4(s, scenario.scaling_law)
            model = attach_payload(model, scenario.payload)
            start_q, prims, dt = benchmark_program(model)
            traj = compile_program(model, start_q, prims, dt=dt)
            pro = pro_torque_profile(model, traj, scenario.gravity)
            reqs = extract_requirements(pro, traj)
            peaks.append(reqs[1].peak_torque)
        assert peaks[0] < peaks[1] < peaks[2]


class TestCatalogIO:
    def test_bundled_catalog_counts_and_roundtrip(self):
        doc = load_benchmark_catalog_document()
        catalog = load_catalog(doc)
        assert len(catalog.motors) == 8
        assert len(catalog.gearboxes) == 10
        assert catalog_to_document(catalog) == doc
        again = load_catalog(json.loads(catalog_to_json(catalog)))
        assert catalog_to_json(again) == catalog_to_json(catalog)

    def test_empty_motor_list_rejected(self):
        with pytest.raises(SizingError):
            load_catalog({"motors": [], "gearboxes": catalog_to_document(
                single_pair_catalog())["gearboxes"]})

    def test_bad_efficiency_rejected(self):
        doc = catalog_to_document(single_pair_catalog())
        doc["gearboxes"][0]["efficiency"] = 1.2
        with pytest.raises(SizingError):
            load_catalog(doc)

    def test_duplicate_names_rejected(self):
        doc = catalog_to_document(single_pair_catalog())
        doc["motors"].append(dict(doc["motors"][0]))
        with pytest.raises(SizingError):
            load_catalog(doc)

    def test_missing_field_located(self):
        doc = catalog_to_document(single_pair_catalog())
        del doc["motors"][0]["mass_kg"]
        with pytest.raises(SizingError, match=r"motors\[0\]"):
            load_catalog(doc)

    def test_csv_roundtrip(self):
        doc = load_benchmark_catalog_document()

        def csv_of(rows, fields):
            lines = [",".join(fields)]
            for r in rows:
                lines.append(",".join(str(r[f]) for f in fields))
            return "\n".join(lines)

        from armsizer.sizing import _GEARBOX_FIELDS, _MOTOR_FIELDS

        catalog = load_catalog_csv(csv_of(doc["motors"], _MOTOR_FIELDS),
                                   csv_of(doc["gearboxes"], _GEARBOX_FIELDS))
        assert catalog_to_document(catalog) == doc

    def test_csv_bad_header_rejected(self):
        with pytest.raises(SizingError, match="header"):
            load_catalog_csv("name,foo\nx,1", "name,bar\ny,2")
