from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesture_grounding.geometry import DEFAULT_CAMERA, pointing_ray, project_many, ray_point_distance
from gesture_grounding.gesture.features import CONFIDENCE_INDEX, N_FEATURES, WORLD_BLOCK, extract_features
from gesture_grounding.gesture.handfile import dumps_hand, loads_hand
from gesture_grounding.gesture.keypoints import (DYNAMIC_CLASSES, INDEX, MIDDLE, PINKY, RING, STATIC_CLASSES,
                                                 GestureClass, GestureObservation, HandKeypoints)
from gesture_grounding.gesture.synth import synth_gesture
from gesture_grounding.errors import InvariantViolation


def _world_block(f):
    return f[WORLD_BLOCK].reshape(21, 3)


class TestFeatures:
    @given(st.integers(0, 10_000), st.tuples(*[st.floats(-1, 1)] * 3))
    def test_translation_leaves_world_block(self, seed, shift):
        h = synth_gesture(GestureClass.FIST, 0.002, seed=seed)[0]
        moved = HandKeypoints(h.image_coords, h.world_coords + np.asarray(shift), h.confidence)
        a, b = extract_features(h, DEFAULT_CAMERA), extract_features(moved, DEFAULT_CAMERA)
        np.testing.assert_allclose(a[WORLD_BLOCK], b[WORLD_BLOCK], atol=1e-9)

    def test_collapsed_hand(self):
        h = HandKeypoints(np.zeros((21, 2)), np.tile([0.1, 0.2, 0.6], (21, 1)), confidence=0.7)
        f = extract_features(h, DEFAULT_CAMERA)
        assert f.shape == (N_FEATURES,)
        assert not f[WORLD_BLOCK].any()
        assert f[CONFIDENCE_INDEX] == 0.7

    def test_pointing_index_reaches_further(self):
        for seed in range(20):
            h = synth_gesture(GestureClass.POINTING, 0.0, seed=seed)[0]
            w = _world_block(extract_features(h, DEFAULT_CAMERA))
            reach = {name: np.linalg.norm(w[chain[-1]] - w[chain[0]]) for name, chain in
                     (("index", INDEX), ("middle", MIDDLE), ("ring", RING), ("pinky", PINKY))}
            assert reach["index"] > max(reach["middle"], reach["ring"], reach["pinky"])

    def test_deterministic(self):
        h = synth_gesture(GestureClass.OK, 0.003, seed=5)[0]
        np.testing.assert_array_equal(extract_features(h, DEFAULT_CAMERA), extract_features(h, DEFAULT_CAMERA))


class TestSynth:
    @pytest.mark.parametrize("cls", STATIC_CLASSES + DYNAMIC_CLASSES)
    def test_same_seed_same_frames(self, cls):
        assert synth_gesture(cls, 0.003, seed=42) == synth_gesture(cls, 0.003, seed=42)

    def test_different_seed_differs(self):
        assert synth_gesture(GestureClass.FIST, 0.003, seed=1) != synth_gesture(GestureClass.FIST, 0.003, seed=2)

    @pytest.mark.parametrize("cls", DYNAMIC_CLASSES)
    def test_dynamic_default_length(self, cls):
        frames = synth_gesture(cls, 0.0, seed=0)
        assert len(frames) == 16
        assert [f.timestamp for f in frames] == sorted(f.timestamp for f in frames)

    def test_image_is_projection_of_world(self):
        h = synth_gesture(GestureClass.PINCH, 0.004, seed=9)[0]
        np.testing.assert_allclose(h.image_coords, project_many(h.world_coords, DEFAULT_CAMERA), atol=1e-9)

    @given(st.integers(0, 2**31), st.tuples(st.floats(-0.8, 0.8), st.floats(-0.4, 0.4), st.floats(1.2, 3.0)))
    def test_noiseless_pointing_hits_target(self, seed, target):
        h = synth_gesture(GestureClass.POINTING, 0.0, seed=seed, target=target)[0]
        assert ray_point_distance(pointing_ray(h), target) <= 1e-9

    def test_noisy_pointing_error_bound(self):
        sigma = 0.003
        target = np.array([0.1, 0.15, 2.0])
        dists, bounds = [], []
        for seed in range(1000):
            clean = synth_gesture(GestureClass.POINTING, 0.0, seed=seed, target=target)[0].world_coords
            noisy = synth_gesture(GestureClass.POINTING, sigma, seed=seed, target=target)[0]
            dists.append(ray_point_distance(pointing_ray(noisy), target))
            bounds.append(3 * sigma * np.linalg.norm(target - clean[8]) / np.linalg.norm(clean[8] - clean[6]))
        assert np.mean(dists) <= np.mean(bounds)
        assert np.mean(dists) > 0

    def test_rejects_unknown_and_negative_noise(self):
        with pytest.raises(ValueError):
            synth_gesture(GestureClass.UNKNOWN)
        with pytest.raises(ValueError):
            synth_gesture(GestureClass.FIST, -0.1)


class TestKeypoints:
    def test_shape_checked(self):
        with pytest.raises(ValueError):
            HandKeypoints(np.zeros((20, 2)), np.zeros((21, 3)))

    def test_parse_labels(self):
        assert GestureClass.parse("Thumbs-Up") is GestureClass.THUMBS_UP
        assert GestureClass.parse("open palm up") is GestureClass.OPEN_PALM_UP
        with pytest.raises(ValueError):
            GestureClass.parse("wave")

    def test_observation_time_within_frames(self):
        frames = synth_gesture(GestureClass.HAMMERING, 0.0, seed=0)
        with pytest.raises(ValueError):
            GestureObservation(GestureClass.HAMMERING, 0.9, tuple(frames), 99.0)

    def test_hand_file_round_trip(self):
        frames = synth_gesture(GestureClass.TWISTING, 0.002, seed=3)
        assert loads_hand(dumps_hand(frames)) == frames

    def test_hand_file_version_checked(self):
        with pytest.raises(InvariantViolation):
            loads_hand('{"format_version": 2, "frames": []}')
