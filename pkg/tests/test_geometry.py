from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_hand
from gesture_grounding.errors import BehindCamera, DegenerateFinger, NonPositiveDepth
from gesture_grounding.geometry import (DEFAULT_CAMERA, CameraIntrinsics, Ray, RigidTransform, apply_transform,
                                        deproject, pointing_ray, project, random_rotation, ray_point_distance,
                                        ray_points_distance)
from oracles import half_line_distance, sampled_ray_distance

CAM = CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)
coord = st.floats(-5.0, 5.0, allow_nan=False)
point = st.tuples(coord, coord, coord)


class TestDeproject:
    def test_principal_point_maps_to_axis(self):
        np.testing.assert_allclose(deproject((CAM.cx, CAM.cy), 2.0, CAM), [0.0, 0.0, 2.0])

    def test_one_focal_length_offset(self):
        np.testing.assert_allclose(deproject((CAM.cx + CAM.fx, CAM.cy), 1.0, CAM), [1.0, 0.0, 1.0])

    def test_off_center_pixel_hand_computed(self):
        cam = CameraIntrinsics(600.0, 600.0, 320.0, 180.0, 640, 480)
        # (320.5 - 320) * 0.8 / 600 and (180.25 - 180) * 0.8 / 600
        expected = np.array([0.5 * 0.8 / 600.0, 0.25 * 0.8 / 600.0, 0.8])
        got = deproject((320.5, 180.25), 0.8, cam)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-15)
        np.testing.assert_allclose(project(got, cam), [320.5, 180.25], atol=1e-9)

    @pytest.mark.parametrize("depth", [0.0, -1.0])
    def test_non_positive_depth(self, depth):
        with pytest.raises(NonPositiveDepth):
            deproject((0, 0), depth, CAM)


class TestProject:
    def test_axis_point(self):
        np.testing.assert_allclose(project((0, 0, 2.0), CAM), [CAM.cx, CAM.cy])

    def test_linear_pinhole(self):
        np.testing.assert_allclose(project((1, 0, 1), CAM), [920.0, CAM.cy])

    def test_behind_camera(self):
        with pytest.raises(BehindCamera):
            project((0, 0, -1), CAM)

    def test_round_trip_thousand_points(self):
        rng = np.random.default_rng(11)
        P = np.column_stack([rng.uniform(-3, 3, 1000), rng.uniform(-3, 3, 1000), rng.uniform(0.05, 10, 1000)])
        for p in P:
            back = deproject(project(p, DEFAULT_CAMERA), p[2], DEFAULT_CAMERA)
            assert np.max(np.abs(back - p)) <= 1e-9

    @given(point.filter(lambda p: p[2] > 0.01))
    def test_round_trip_property(self, p):
        back = deproject(project(p, CAM), p[2], CAM)
        assert np.allclose(back, p, atol=1e-9, rtol=0)


class TestTransforms:
    def test_identity(self):
        np.testing.assert_array_equal(apply_transform(RigidTransform.identity(), (1.5, -2, 3)), [1.5, -2, 3])

    def test_translation(self):
        t = RigidTransform(np.eye(3), (0, 0, 1))
        np.testing.assert_allclose(apply_transform(t, (1, 2, 3)), [1, 2, 4])

    def test_quarter_turn_about_z(self):
        t = RigidTransform.from_axis_angle((0, 0, 1), math.pi / 2)
        np.testing.assert_allclose(apply_transform(t, (1, 0, 0)), [0, 1, 0], atol=1e-15)

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), (0, 0, 0))


class TestRayDistance:
    X_RAY = Ray((0, 0, 0), (1, 0, 0))

    def test_on_ray(self):
        assert ray_point_distance(self.X_RAY, self.X_RAY.at(0.5)) == 0.0

    def test_perpendicular(self):
        got = ray_point_distance(self.X_RAY, (1, 1, 0))
        assert got == pytest.approx(1.0, abs=1e-12)
        assert sampled_ray_distance((0, 0, 0), (1, 0, 0), (1, 1, 0)) == pytest.approx(got, abs=1e-6)

    def test_behind_origin_clamps(self):
        got = ray_point_distance(self.X_RAY, (-2, 0, 0))
        assert got == pytest.approx(2.0, abs=1e-12)
        assert sampled_ray_distance((0, 0, 0), (1, 0, 0), (-2, 0, 0)) == pytest.approx(got, abs=1e-6)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValueError):
            Ray((0, 0, 0), (2, 0, 0))

    @given(point, point.filter(lambda v: np.linalg.norm(v) > 1e-3), point)
    def test_matches_closed_form_oracle(self, o, d, p):
        r = Ray(o, np.asarray(d) / np.linalg.norm(d))
        got = ray_point_distance(r, p)
        assert got >= 0.0
        assert got == pytest.approx(half_line_distance(o, d, p), abs=1e-9)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        r = Ray(rng.normal(size=3), (0, 0.6, 0.8))
        P = rng.normal(size=(200, 3))
        np.testing.assert_allclose(ray_points_distance(r, P), [ray_point_distance(r, p) for p in P], atol=1e-15)

    @given(st.integers(0, 2**32 - 1))
    def test_isometry_invariance(self, seed):
        rng = np.random.default_rng(seed)
        d = rng.normal(size=3)
        r = Ray(rng.normal(size=3), d / np.linalg.norm(d))
        p = rng.normal(size=3) * 2
        t = RigidTransform(random_rotation(rng), rng.normal(size=3) * 3)
        assert ray_point_distance(t.apply_ray(r), t.apply(p)) == pytest.approx(ray_point_distance(r, p), abs=1e-9)


class TestPointingRay:
    def test_index_along_x(self):
        r = pointing_ray(make_hand(pip=(0, 0, 0), tip=(0.03, 0, 0)))
        np.testing.assert_allclose(r.origin, [0.03, 0, 0])
        np.testing.assert_allclose(r.direction, [1, 0, 0])

    def test_degenerate_finger(self):
        with pytest.raises(DegenerateFinger):
            pointing_ray(make_hand(pip=(0.1, 0.1, 0.5), tip=(0.1, 0.1, 0.5)))

    @given(point, point)
    def test_unit_direction(self, pip, tip):
        if np.linalg.norm(np.subtract(tip, pip)) <= 1e-6:
            with pytest.raises(DegenerateFinger):
                pointing_ray(make_hand(pip=pip, tip=tip))
            return
        assert np.linalg.norm(pointing_ray(make_hand(pip=pip, tip=tip)).direction) == pytest.approx(1.0, abs=1e-9)
