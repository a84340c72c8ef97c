"""Pinhole camera model, rigid transforms and pointing-ray distances.

Positions are meters in a right-handed frame with +z into the scene
(+x right, +y down, the usual camera convention). Points and directions
are plain ``numpy`` arrays of shape ``(3,)``; pixels are shape ``(2,)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import BehindCamera, DegenerateFinger, NonPositiveDepth

if TYPE_CHECKING:
    from .gesture.keypoints import HandKeypoints

GEOM_TOL = 1e-9
DEGENERATE_FINGER_TOL = 1e-6

INDEX_PIP = 6
INDEX_TIP = 8


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))


DEFAULT_CAMERA = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)


@dataclass(frozen=True)
class Ray:
    """Half-line starting at ``origin`` along unit ``direction``."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        d = as_point(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > GEOM_TOL:
            raise ValueError("ray direction must be a unit vector")
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if not np.allclose(R.T @ R, np.eye(3), atol=GEOM_TOL, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > GEOM_TOL:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", as_point(self.translation))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(axis_angle_matrix(axis, angle), translation)

    def apply(self, p) -> np.ndarray:
        """Transform one point ``(3,)`` or a stack of points ``(n, 3)``."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_direction(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def apply_ray(self, r: Ray) -> Ray:
        return Ray(self.apply(r.origin), self.apply_direction(r.direction))


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    # uniform over SO(3) via a random unit quaternion
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    R = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    # re-orthonormalise to keep RigidTransform's 1e-9 check comfortable
    u, _, vt = np.linalg.svd(R)
    return u @ vt


def deproject(pixel, depth: float, cam: CameraIntrinsics) -> np.ndarray:
    if not depth > 0:
        raise NonPositiveDepth(f"depth must be positive, got {depth}")
    u, v = float(pixel[0]), float(pixel[1])
    return np.array([(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, float(depth)])


def project(point, cam: CameraIntrinsics) -> np.ndarray:
    x, y, z = as_point(point)
    if not z > 0:
        raise BehindCamera(f"point has z={z}; must be in front of the camera")
    return np.array([cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy])


def project_many(points, cam: CameraIntrinsics) -> np.ndarray:
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    if np.any(P[:, 2] <= 0):
        raise BehindCamera("all points must have z > 0")
    return np.column_stack([cam.fx * P[:, 0] / P[:, 2] + cam.cx, cam.fy * P[:, 1] / P[:, 2] + cam.cy])


def apply_transform(t: RigidTransform, p) -> np.ndarray:
    return t.apply(p)


def ray_point_distance(r: Ray, p) -> float:
    """Distance from ``p`` to the half-line ``r``.

    Points behind the origin measure to the origin itself.
    """
    rel = as_point(p) - r.origin
    t = max(0.0, float(rel @ r.direction))
    return float(np.linalg.norm(rel - t * r.direction))


def ray_points_distance(r: Ray, points) -> np.ndarray:
    """Vectorised :func:`ray_point_distance` over an ``(n, 3)`` array."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    rel = P - r.origin
    t = np.maximum(rel @ r.direction, 0.0)
    return np.linalg.norm(rel - t[:, None] * r.direction, axis=1)


def pointing_ray(hand: "HandKeypoints") -> Ray:
    """Ray from the index fingertip along the PIP->tip direction."""
    tip = hand.world_coords[INDEX_TIP]
    pip = hand.world_coords[INDEX_PIP]
    v = tip - pip
    n = float(np.linalg.norm(v))
    if n <= DEGENERATE_FINGER_TOL:
        raise DegenerateFinger(f"index PIP and tip coincide (|tip - pip| = {n:.3g} m)")
    return Ray(tip, v / n)
