import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armsizer.model import (
    Link,
    LinkInertia,
    ModelError,
    PayloadSpec,
    ScalingLaw,
    apply_scaling,
    attach_actuator_masses,
    attach_payload,
    combine_inertia,
    from_document,
    to_document,
    total_mass,
    validate_model,
)
from armsizer.robots import (
    CALIBRATED_LAW,
    build_cr4,
    build_cr6,
    cr4_reference,
    cr6_reference,
    reach,
)

PAYLOAD = PayloadSpec(10.0, (0.0, 0.0, 0.1), np.diag([0.0547, 0.0963, 0.1083]))


class TestBuilders:
    def test_cr4_reach_reference(self):
        assert reach(build_cr4(1.0)) == pytest.approx(0.945, abs=1e-12)

    def test_cr4_reach_scaled(self):
        assert reach(build_cr4(1.6)) == pytest.approx(1.512, abs=1e-12)

    def test_cr4_identity_scaling(self):
        ref = cr4_reference()
        scaled = apply_scaling(ref, 1.0, CALIBRATED_LAW)
        for a, b in zip(ref.links, scaled.links):
            assert a.inertia.mass == b.inertia.mass
            np.testing.assert_array_equal(a.inertia.com, b.inertia.com)
            np.testing.assert_array_equal(a.inertia.inertia, b.inertia.inertia)
        for ja, jb in zip(ref.joints, scaled.joints):
            np.testing.assert_array_equal(ja.origin, jb.origin)

    def test_cr4_structure(self):
        m = build_cr4(1.0)
        assert m.n_a == 4
        assert m.n_p == 2
        assert m.n == 6
        assert len(m.closures) == 1
        assert m.closure_dim == m.n_p

    def test_cr6_structure(self):
        m = build_cr6(1.0)
        assert m.n_a == 6
        assert m.closures == ()
        assert m.n_p == 0

    def test_cr6_lengths_double(self):
        a, b = build_cr6(1.0), build_cr6(2.0)
        for ja, jb in zip(a.joints, b.joints):
            np.testing.assert_allclose(jb.origin[:3, 3], 2.0 * ja.origin[:3, 3], atol=1e-15)

    def test_cr6_masses_cube(self):
        a = build_cr6(1.0)
        b = build_cr6(2.0, ScalingLaw(mass_exponent=3.0, inertia_exponent=5.0))
        for la, lb in zip(a.links, b.links):
            assert lb.inertia.mass == pytest.approx(8.0 * la.inertia.mass, rel=1e-12)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ModelError):
            build_cr4(0.0)
        with pytest.raises(ModelError):
            build_cr6(-1.0)


class TestScaling:
    def test_mass_ratio_calibrated(self):
        ref = cr4_reference()
        scaled = apply_scaling(ref, 1.6, CALIBRATED_LAW)
        expected = 1.6**1.7
        for a, b in zip(ref.links, scaled.links):
            if a.inertia.mass > 0:
                assert b.inertia.mass / a.inertia.mass == pytest.approx(expected, rel=1e-12)

    def test_inertia_ratio_calibrated(self):
        ref = cr4_reference()
        scaled = apply_scaling(ref, 1.6, CALIBRATED_LAW)
        expected = 1.6**3.7
        for a, b in zip(ref.links, scaled.links):
            if np.any(a.inertia.inertia):
                np.testing.assert_allclose(b.inertia.inertia, expected * a.inertia.inertia,
                                           rtol=1e-12)

    def test_com_and_origins_scale_with_length(self):
        ref = cr6_reference()
        s = 1.3
        scaled = apply_scaling(ref, s, CALIBRATED_LAW)
        for a, b in zip(ref.links, scaled.links):
            np.testing.assert_allclose(b.inertia.com, s * a.inertia.com, atol=1e-15)
        for ja, jb in zip(ref.joints, scaled.joints):
            np.testing.assert_allclose(jb.origin[:3, 3], s * ja.origin[:3, 3], atol=1e-15)
            np.testing.assert_allclose(jb.origin[:3, :3], ja.origin[:3, :3], atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(s1=st.floats(0.5, 2.0), s2=st.floats(0.5, 2.0))
    def test_scaling_composes(self, s1, s2):
        ref = cr4_reference()
        once = apply_scaling(ref, s1 * s2, CALIBRATED_LAW)
        twice = apply_scaling(apply_scaling(ref, s1, CALIBRATED_LAW), s2, CALIBRATED_LAW)
        for a, b in zip(once.links, twice.links):
            assert b.inertia.mass == pytest.approx(a.inertia.mass, rel=1e-12)
            np.testing.assert_allclose(b.inertia.com, a.inertia.com, rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(b.inertia.inertia, a.inertia.inertia, rtol=1e-12,
                                       atol=1e-15)

    @settings(max_examples=20, deadline=None)
    @given(s=st.floats(0.4, 2.5))
    def test_reach_scales_linearly(self, s):
        base = reach(cr4_reference())
        assert reach(build_cr4(s, CALIBRATED_LAW)) == pytest.approx(s * base, rel=1e-12)

    def test_law_exponent_ordering_enforced(self):
        with pytest.raises(ModelError):
            ScalingLaw(mass_exponent=5.0, inertia_exponent=3.0)


class TestPayload:
    def test_zero_mass_payload_is_identity(self, cr4_unit):
        zero = PayloadSpec(0.0, (0, 0, 0.1), np.zeros((3, 3)))
        out = attach_payload(cr4_unit, zero)
        tool_a = cr4_unit.link("tool").inertia
        tool_b = out.link("tool").inertia
        assert tool_b.mass == tool_a.mass
        np.testing.assert_allclose(tool_b.com, tool_a.com, atol=1e-15)
        np.testing.assert_allclose(tool_b.inertia, tool_a.inertia, atol=1e-15)

    def test_mass_bookkeeping(self, cr4_unit):
        out = attach_payload(cr4_unit, PAYLOAD)
        assert total_mass(out) == pytest.approx(total_mass(cr4_unit) + 10.0, abs=1e-12)
        assert out.link("tool").inertia.mass == pytest.approx(
            cr4_unit.link("tool").inertia.mass + 10.0)

    def test_value_semantics(self, cr4_unit):
        before = cr4_unit.link("tool").inertia.mass
        attach_payload(cr4_unit, PAYLOAD)
        assert cr4_unit.link("tool").inertia.mass == before

    def test_two_attachments_compose(self, cr4_unit):
        com = np.array([0.01, -0.02, 0.08])
        p1 = PayloadSpec(4.0, com, np.diag([0.01, 0.02, 0.015]))
        p2 = PayloadSpec(6.0, com, np.diag([0.03, 0.01, 0.025]))
        both = PayloadSpec(10.0, com, np.diag([0.04, 0.03, 0.04]))
        seq = attach_payload(attach_payload(cr4_unit, p1), p2)
        once = attach_payload(cr4_unit, both)
        a, b = seq.link("tool").inertia, once.link("tool").inertia
        assert a.mass == pytest.approx(b.mass, rel=1e-12)
        np.testing.assert_allclose(a.com, b.com, atol=1e-12)
        np.testing.assert_allclose(a.inertia, b.inertia, atol=1e-12)

    def test_invalid_payload_rejected(self):
        with pytest.raises(ModelError):
            PayloadSpec(-1.0, (0, 0, 0), np.zeros((3, 3)))


def gravity_moment_about_axis(model, q, joint_name, gravity=(0, 0, -9.81)):
    """Independent statics oracle: total moment of link weights about a joint axis."""
    from armsizer.kinematics import fk_all

    poses = fk_all(model, q)
    joint = model.joint(joint_name)
    T = poses[model.link_index(joint.child_link)]
    axis = T[:3, :3] @ joint.axis
    p0 = T[:3, 3]
    g = np.asarray(gravity, dtype=float)
    total = 0.0
    for i, link in enumerate(model.links):
        com_w = poses[i][:3, 3] + poses[i][:3, :3] @ link.inertia.com
        total += link.inertia.mass * np.cross(com_w - p0, g) @ axis
    return total


class TestActuatorMasses:
    def test_zero_masses_identity(self, cr4_unit):
        out = attach_actuator_masses(cr4_unit, np.zeros(4))
        for a, b in zip(cr4_unit.links, out.links):
            assert a.inertia.mass == b.inertia.mass

    def test_static_moment_oracle(self, cr4_unit):
        from armsizer.kinematics import solve_closure

        q = solve_closure(cr4_unit, np.array([0.2, 0.5, -0.3, 0.0]))
        masses = np.array([5.0, 0.0, 0.0, 0.0])
        loaded = attach_actuator_masses(cr4_unit, masses)
        before = gravity_moment_about_axis(cr4_unit, q, "J2")
        after = gravity_moment_about_axis(loaded, q, "J2")
        # point mass sits at J1's origin on the base; its own moment about J2
        from armsizer.kinematics import fk_all

        poses = fk_all(cr4_unit, q)
        j1 = cr4_unit.joint("J1")
        p_mass = (poses[cr4_unit.link_index(j1.parent_link)] @ j1.origin)[:3, 3]
        j2 = cr4_unit.joint("J2")
        T2 = poses[cr4_unit.link_index(j2.child_link)]
        axis = T2[:3, :3] @ j2.axis
        expected = 5.0 * np.cross(p_mass - T2[:3, 3], np.array([0, 0, -9.81])) @ axis
        assert after - before == pytest.approx(expected, abs=1e-10)

    def test_masses_then_zero_is_idempotent(self, cr4_unit):
        masses = np.array([2.0, 5.0, 3.0, 1.0])
        once = attach_actuator_masses(cr4_unit, masses)
        twice = attach_actuator_masses(once, np.zeros(4))
        for a, b in zip(once.links, twice.links):
            assert a.inertia.mass == b.inertia.mass
            np.testing.assert_allclose(a.inertia.com, b.inertia.com, atol=1e-15)

    def test_negative_mass_rejected(self, cr4_unit):
        with pytest.raises(ModelError):
            attach_actuator_masses(cr4_unit, np.array([1.0, -0.1, 0.0, 0.0]))

    def test_wrong_count_rejected(self, cr4_unit):
        with pytest.raises(ModelError):
            attach_actuator_masses(cr4_unit, np.array([1.0, 2.0]))


class TestValidation:
    @pytest.mark.parametrize("s", [0.5, 1.0, 1.6, 2.0])
    @pytest.mark.parametrize("law", [ScalingLaw(3.0, 5.0), CALIBRATED_LAW])
    def test_built_models_valid(self, s, law):
        assert validate_model(build_cr4(s, law)) == []
        assert validate_model(build_cr6(s, law)) == []

    def test_negative_mass_flagged(self, cr4_unit):
        links = list(cr4_unit.links)
        idx = cr4_unit.link_index("forearm")
        bad = LinkInertia(-1.0, links[idx].inertia.com, links[idx].inertia.inertia)
        links[idx] = Link("forearm", bad)
        violations = validate_model(cr4_unit.with_links(tuple(links)))
        assert any("mass" in v for v in violations)

    def test_missing_closure_frame_flagged(self, cr4_unit):
        from dataclasses import replace

        from armsizer.model import LoopClosureSpec

        bad = replace(cr4_unit, closures=(LoopClosureSpec("coupler_tip", "nowhere", ("x", "z")),))
        violations = validate_model(bad)
        assert any("missing frame" in v for v in violations)

    def test_nonsquare_closure_flagged(self, cr4_unit):
        from dataclasses import replace

        from armsizer.model import LoopClosureSpec

        bad = replace(cr4_unit,
                      closures=(LoopClosureSpec("coupler_tip", "forearm_bracket", ("x",)),))
        violations = validate_model(bad)
        assert any("closure dimension" in v for v in violations)


class TestSerialization:
    @pytest.mark.parametrize("builder", [build_cr4, build_cr6])
    def test_roundtrip(self, builder):
        model = builder(1.6, CALIBRATED_LAW)
        doc = to_document(model)
        back = from_document(doc)
        assert to_document(back) == doc
        assert validate_model(back) == []
        assert back.n_a == model.n_a
        assert back.scale == model.scale

    def test_document_shape(self, cr4_unit):
        doc = to_document(cr4_unit)
        assert set(doc) >= {"version", "links", "joints", "closures", "tool_frame", "meta"}
        assert doc["meta"]["scale"] == 1.0
        origin = doc["joints"][0]["origin"]
        assert len(origin["xyz"]) == 3
        assert len(origin["quat_wxyz"]) == 4

    def test_unknown_version_rejected(self, cr4_unit):
        doc = to_document(cr4_unit)
        doc["version"] = 99
        with pytest.raises(ModelError):
            from_document(doc)


class TestCombineInertia:
    def test_point_masses(self):
        a = LinkInertia.point(2.0, (1.0, 0.0, 0.0))
        b = LinkInertia.point(2.0, (-1.0, 0.0, 0.0))
        c = combine_inertia(a, b)
        assert c.mass == 4.0
        np.testing.assert_allclose(c.com, np.zeros(3), atol=1e-15)
        # two point masses at +-1 m about their COM: Iyy = Izz = 4, Ixx = 0
        np.testing.assert_allclose(np.diag(c.inertia), [0.0, 4.0, 4.0], atol=1e-12)
