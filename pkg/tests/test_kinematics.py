import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinetherm import kinematics as km
from vinetherm import ppam, thermo
from vinetherm.errors import GeometryError, OutOfRangeError, ValidationError

GEOM = km.ChainGeometry()
SPINE = km.SpineConfig()
ACT = ppam.ActuatorGeometry()
FLUID = thermo.FluidState()

pairs = st.lists(st.tuples(st.floats(0.0, 0.3), st.floats(0.0, 0.3)), min_size=1, max_size=8)


def direct_thetas(gammas, l0, d):
    """Sequential hand evaluation of the interface relation."""
    out, prev = [], 0.0
    for g1, g2 in gammas:
        prev = l0 * (g2 - g1) - prev
        out.append(math.degrees(math.atan2(d, prev)))
    return out


class TestSpine:
    def test_zero_pressure(self):
        assert km.spam_equilibrium_force(km.SpineConfig(gauge_pressure=0.0)) == 0.0

    def test_default_force(self):
        assert SPINE.area == pytest.approx(7.9577e-4, rel=1e-4)
        assert km.spam_equilibrium_force(SPINE) == pytest.approx(12e3 * 0.05 ** 2 / math.pi / 2)
        assert km.spam_equilibrium_force(SPINE) == pytest.approx(4.775, abs=5e-4)

    def test_width_squared(self):
        wide = km.SpineConfig(layflat_width=0.10)
        assert km.spam_equilibrium_force(wide) == pytest.approx(4 * km.spam_equilibrium_force(SPINE))


class TestAngles:
    def test_reference_case(self):
        th = np.degrees(km.segment_angles([(0.163, 0.0)] * 5, GEOM))
        want = direct_thetas([(0.163, 0.0)] * 5, 0.041, 0.050)
        np.testing.assert_allclose(th, want, atol=1e-12)
        np.testing.assert_allclose(th, [97.61, 90.0, 97.61, 90.0, 97.61], atol=0.01)

    def test_offset_value(self):
        u = km.interface_offsets([(0.163, 0.0)], GEOM)
        assert u[0] == pytest.approx(-0.006683, abs=1e-7)

    def test_rectangles(self):
        np.testing.assert_allclose(km.segment_angles([(0.1, 0.1)] * 4, GEOM), math.pi / 2)

    @settings(max_examples=60)
    @given(st.floats(0.0, 0.3), st.floats(0.0, 0.3), st.integers(1, 9))
    def test_uniform_alternation(self, g1, g2, n):
        th = km.segment_angles([(g1, g2)] * n, GEOM)
        star = math.atan2(GEOM.d, GEOM.l0 * (g2 - g1))
        want = [star if i % 2 == 0 else math.pi / 2 for i in range(n)]
        np.testing.assert_allclose(th, want, atol=1e-12)

    @given(pairs)
    def test_swap_antisymmetry(self, g):
        try:
            a = km.segment_angles(g, GEOM)
        except GeometryError:
            return
        b = km.segment_angles([(y, x) for x, y in g], GEOM)
        np.testing.assert_allclose(b, math.pi - a, atol=1e-12)

    def test_infeasible(self):
        with pytest.raises(GeometryError, match="interface"):
            km.segment_angles([(0.3, 0.0), (0.0, 0.3), (0.3, 0.0), (0.0, 0.3)], GEOM)

    def test_range(self):
        with pytest.raises(ValidationError):
            km.segment_angles([(1.0, 0.0)], GEOM)

    def test_constant_curvature_variant(self):
        th = km.constant_curvature_angles([(0.163, 0.0)] * 4, GEOM)
        assert np.ptp(th) == 0.0
        assert math.degrees(th[0]) == pytest.approx(math.degrees(math.atan2(0.05, -0.041 * 0.163 / 2)))


class TestPose:
    def test_straight_chain(self):
        pose = km.chain_pose([(0.2, 0.2)] * 3, GEOM)
        np.testing.assert_allclose(pose.side1[:, 0], 0.0, atol=1e-15)
        np.testing.assert_allclose(np.diff(pose.side1[:, 1]), 0.041 * 0.8)
        np.testing.assert_allclose(pose.side2[:, 0], GEOM.d)

    def test_reference_heading(self):
        pose = km.chain_pose([(0.163, 0.0)] * 5, GEOM)
        th = np.radians(direct_thetas([(0.163, 0.0)] * 5, 0.041, 0.050))
        assert math.degrees(pose.tip_heading) == pytest.approx(math.degrees(np.sum(math.pi - 2 * th[:4])), abs=1e-9)
        assert math.degrees(pose.tip_heading) == pytest.approx(-30.46, abs=0.05)

    def test_turns_toward_side_one(self):
        pose = km.chain_pose([(0.163, 0.0)] * 5, GEOM)
        assert pose.side1[-1, 0] < 0.0 and pose.end_heading < 0.0

    @given(pairs)
    def test_side_lengths(self, g):
        try:
            pose = km.chain_pose(g, GEOM)
        except GeometryError:
            return
        g = np.asarray(g)
        np.testing.assert_allclose(np.linalg.norm(np.diff(pose.side1, axis=0), axis=1), GEOM.l0 * (1 - g[:, 0]), atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(np.diff(pose.side2, axis=0), axis=1), GEOM.l0 * (1 - g[:, 1]), atol=1e-14)
        np.testing.assert_allclose(km.gammas_from_pose(pose, GEOM), g, atol=1e-12)

    def test_side_two_arc_length(self):
        pose = km.chain_pose([(0.163, 0.0)] * 6, GEOM)
        assert np.sum(np.linalg.norm(np.diff(pose.side2, axis=0), axis=1)) == pytest.approx(6 * 0.041, abs=1e-14)

    def test_leg_width_constant(self):
        pose = km.chain_pose([(0.1, 0.0), (0.05, 0.02), (0.0, 0.0)], GEOM)
        for j, th in enumerate(pose.thetas):
            leg = pose.side2[j + 1] - pose.side1[j + 1]
            assert np.linalg.norm(leg) == pytest.approx(GEOM.d / math.sin(th), rel=1e-12)

    def test_mirror(self):
        th = np.array([1.4, 1.7, 1.5, 1.65])
        g = [(0.05, 0.05)] * 4
        a = km.chain_pose(g, GEOM, thetas=th)
        b = km.chain_pose(g, GEOM, thetas=math.pi - th)
        flip = np.array([-1.0, 1.0])
        # reflect about the chain centre line x = d/2
        np.testing.assert_allclose((a.side1 - [GEOM.d / 2, 0]) * flip, b.side2 - [GEOM.d / 2, 0], atol=1e-15)
        np.testing.assert_allclose(b.headings, -a.headings, atol=1e-15)

    @given(st.floats(-3.0, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
    def test_covariance(self, heading, ox, oy):
        pose = km.chain_pose([(0.12, 0.0), (0.0, 0.05), (0.08, 0.02)], GEOM)
        moved = km.transform_pose(pose, (ox, oy), heading)
        c, s = math.cos(heading), math.sin(heading)
        rot = np.array([[c, s], [-s, c]])
        np.testing.assert_allclose(moved.side1, pose.side1 @ rot.T + [ox, oy], atol=1e-14)
        # distances are preserved
        np.testing.assert_allclose(np.linalg.norm(moved.side2 - moved.side1, axis=1),
                                   np.linalg.norm(pose.side2 - pose.side1, axis=1), atol=1e-14)
        np.testing.assert_allclose(moved.headings, pose.headings + heading)

    def test_heading_convention(self):
        pose = km.transform_pose(km.chain_pose([(0.0, 0.0)], GEOM), (0.0, 0.0), math.pi / 2)
        # heading pi/2 points along +x
        assert pose.spine[-1] - pose.spine[0] == pytest.approx([0.041, 0.0], abs=1e-15)


class TestThermometry:
    def test_round_trip_315(self):
        P = thermo.gauge_pressure(315.0, FLUID)
        gamma = ppam.gamma_from_force(km.spam_equilibrium_force(SPINE), P, ACT)
        T = km.thermometry_inverse(gamma, SPINE, ACT, FLUID)
        assert T == pytest.approx(315.0, abs=0.05)

    def test_sweep_oracle_at_0_10(self):
        T = km.thermometry_inverse(0.10, SPINE, ACT, FLUID)
        target = km.spam_equilibrium_force(SPINE)
        grid = np.arange(300.0, 400.0, 0.01)
        # force is linear in pressure, so one unit-pressure solve covers the sweep
        f = thermo.gauge_pressure(grid, FLUID) * ppam.force(1.0, ACT, 0.10)
        crossing = grid[np.argmax(f >= target)]
        assert crossing - 0.01 <= T <= crossing + 1e-9
        assert np.sum(np.diff(np.sign(f - target)) != 0) == 1

    def test_array(self):
        T = km.thermometry_inverse(np.array([0.05, 0.15]), SPINE, ACT, FLUID)
        assert T.shape == (2,) and T[0] < T[1]

    def test_near_zero_force_gamma(self):
        gzf = ppam.zero_force_gamma(ACT.l_over_r)
        with pytest.raises(OutOfRangeError):
            km.thermometry_inverse(gzf - 1e-9, SPINE, ACT, FLUID)
        with pytest.raises(OutOfRangeError):
            km.thermometry_inverse(gzf, SPINE, ACT, FLUID)
