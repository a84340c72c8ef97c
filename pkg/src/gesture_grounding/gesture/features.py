from __future__ import annotations

from typing import Sequence

import numpy as np

from ..geometry import CameraIntrinsics
from .keypoints import WRIST, HandKeypoints

N_FEATURES = 106
IMAGE_BLOCK = slice(0, 42)
WORLD_BLOCK = slice(42, 105)
CONFIDENCE_INDEX = 105

_SCALE_KEYPOINT = 9  # middle-finger MCP
_MIN_SCALE = 1e-9


def extract_features(frame: HandKeypoints, cam: CameraIntrinsics) -> np.ndarray:
    """Flatten one hand into the 106-dimensional classifier input.

    Layout: 21x(u, v) divided by image width/height, then 21x(x, y, z)
    relative to the wrist and divided by the wrist->middle-MCP length, then
    the detection confidence. A collapsed hand (zero palm length) yields a
    zero world block.
    """
    img = frame.image_coords / np.array([cam.width, cam.height], dtype=float)
    rel = frame.world_coords - frame.world_coords[WRIST]
    scale = float(np.linalg.norm(rel[_SCALE_KEYPOINT]))
    world = rel / scale if scale > _MIN_SCALE else np.zeros_like(rel)
    return np.concatenate([img.ravel(), world.ravel(), [frame.confidence]])


def extract_features_many(frames: Sequence[HandKeypoints], cam: CameraIntrinsics) -> np.ndarray:
    return np.stack([extract_features(f, cam) for f in frames])
