"""Procedural hand-keypoint generator.

Hands are built in a local frame (x: wrist towards fingers, y: towards the
thumb, z: the direction the palm faces; fingers curl towards +z), then
rotated/translated into the camera frame. Every class has a characteristic
finger configuration and palm orientation; dynamic classes add a motion
over the frame window. All randomness comes from ``seed``.
"""
from __future__ import annotations

import math

import numpy as np

from ..geometry import DEFAULT_CAMERA, CameraIntrinsics, axis_angle_matrix, project_many
from .keypoints import GestureClass, HandKeypoints

FPS = 30.0
DEFAULT_DYNAMIC_FRAMES = 16

# camera frame: +y is down, so world "up" is -y
UP = np.array([0.0, -1.0, 0.0])
DOWN = -UP
TOWARD_CAMERA = np.array([0.0, 0.0, -1.0])
AWAY = -TOWARD_CAMERA

_MCP = {
    "index": (0.085, 0.024),
    "middle": (0.090, 0.002),
    "ring": (0.084, -0.018),
    "pinky": (0.074, -0.035),
}
_SEGMENTS = {
    "index": (0.040, 0.024, 0.020),
    "middle": (0.045, 0.028, 0.022),
    "ring": (0.041, 0.026, 0.021),
    "pinky": (0.032, 0.019, 0.018),
}
_SPREAD = {"index": math.radians(4), "middle": 0.0, "ring": math.radians(-4), "pinky": math.radians(-8)}
_THUMB_CMC = np.array([0.022, 0.020, 0.0])
_THUMB_SEGMENTS = (0.038, 0.032, 0.027)
_FINGER_ORDER = ("index", "middle", "ring", "pinky")

EXTENDED = (0.0, 0.0, 0.0)
CURLED = tuple(math.radians(a) for a in (85.0, 100.0, 60.0))
HALF = tuple(math.radians(a) for a in (40.0, 55.0, 35.0))

# segment directions for a thumb folded across the palm
_TUCKED_THUMB = [np.array(d) / np.linalg.norm(d) for d in ((0.55, 0.6, 0.55), (0.6, -0.3, 0.75), (0.3, -0.8, 0.5))]


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def frame_from(forward, palm_hint) -> np.ndarray:
    """Rotation whose columns are (forward, thumb side, palm normal)."""
    x = _unit(forward)
    hint = np.asarray(palm_hint, dtype=float)
    z = hint - (hint @ x) * x
    if np.linalg.norm(z) < 1e-6:
        alt = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
        z = alt - (alt @ x) * x
    z = _unit(z)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def _finger_chain(name: str, flex, spread: float | None = None) -> np.ndarray:
    base = np.array([*_MCP[name], 0.0])
    psi = _SPREAD[name] if spread is None else spread
    planar = np.array([math.cos(psi), math.sin(psi), 0.0])
    pts = [base]
    phi = 0.0
    for length, a in zip(_SEGMENTS[name], flex):
        phi += a
        d = math.cos(phi) * planar + math.sin(phi) * np.array([0.0, 0.0, 1.0])
        pts.append(pts[-1] + length * d)
    return np.array(pts)


def _thumb_chain(mode: str, index_tip: np.ndarray | None = None) -> np.ndarray:
    c = _THUMB_CMC
    if mode == "tucked":
        dirs = _TUCKED_THUMB
    elif mode in ("extended", "lateral"):
        alpha = math.radians(50.0 if mode == "extended" else 85.0)
        u = np.array([math.cos(alpha), math.sin(alpha), 0.0])
        bend = math.radians(8.0) if mode == "extended" else 0.0
        dirs = [_unit(u * math.cos(k * bend) + np.array([0, 0, 1.0]) * math.sin(k * bend)) for k in range(3)]
    elif mode == "touch":
        span = index_tip - c
        bulge = np.array([0.0, 0.012, -0.008])
        mcp = c + 0.40 * span + bulge
        ip = c + 0.72 * span + 0.6 * bulge
        return np.array([c, mcp, ip, index_tip.copy()])
    else:
        raise ValueError(f"unknown thumb mode {mode!r}")
    pts = [c]
    for length, d in zip(_THUMB_SEGMENTS, dirs):
        pts.append(pts[-1] + length * d)
    return np.array(pts)


def local_hand(flex: dict, thumb: str, index_spread: float | None = None) -> np.ndarray:
    """21 keypoints in the local hand frame (wrist at the origin)."""
    pts = np.zeros((21, 3))
    for k, name in enumerate(_FINGER_ORDER):
        chain = _finger_chain(name, flex[name], index_spread if name == "index" else None)
        pts[5 + 4 * k: 9 + 4 * k] = chain
    pts[1:5] = _thumb_chain(thumb, pts[8])
    return pts


def _pose_flex(index, middle, ring, pinky) -> dict:
    return {"index": index, "middle": middle, "ring": ring, "pinky": pinky}


def _jitter(flex: dict, rng: np.random.Generator, amount: float, skip=()) -> dict:
    out = {}
    for k, v in flex.items():
        if k in skip:
            out[k] = v
        else:
            out[k] = tuple(float(a + rng.uniform(-amount, amount)) for a in v)
    return out


def _blend(a, b, s: float):
    return tuple((1 - s) * x + s * y for x, y in zip(a, b))


def _random_hand_position(rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.uniform(-0.15, 0.15), rng.uniform(-0.10, 0.15), rng.uniform(0.45, 0.75)])


def _yaw(angle: float) -> np.ndarray:
    return axis_angle_matrix(UP, angle)


def _static_spec(cls: GestureClass, rng: np.random.Generator):
    """(flex, thumb mode, forward, palm hint) for a static class."""
    yaw = _yaw(rng.uniform(-0.4, 0.4))
    fwd_h = yaw @ AWAY
    if cls is GestureClass.POINTING:
        fwd = _unit(AWAY + rng.uniform(-0.5, 0.5) * np.array([1, 0, 0]) + rng.uniform(-0.1, 0.5) * DOWN)
        return _pose_flex(EXTENDED, CURLED, CURLED, CURLED), "tucked", fwd, DOWN
    if cls is GestureClass.OPEN_PALM_UP:
        return _pose_flex(EXTENDED, EXTENDED, EXTENDED, EXTENDED), "extended", fwd_h, UP
    if cls is GestureClass.OPEN_PALM_OUT:
        return _pose_flex(EXTENDED, EXTENDED, EXTENDED, EXTENDED), "extended", yaw @ UP, yaw @ TOWARD_CAMERA
    if cls is GestureClass.FIST:
        return _pose_flex(CURLED, CURLED, CURLED, CURLED), "tucked", yaw @ UP, yaw @ TOWARD_CAMERA
    if cls in (GestureClass.THUMBS_UP, GestureClass.THUMBS_DOWN):
        side = UP if cls is GestureClass.THUMBS_UP else DOWN
        # columns (x, y, z): forward horizontal, thumb side vertical
        palm = np.cross(fwd_h, side)
        return _pose_flex(CURLED, CURLED, CURLED, CURLED), "lateral", fwd_h, palm
    if cls is GestureClass.OK:
        return _pose_flex(HALF, EXTENDED, EXTENDED, EXTENDED), "touch", yaw @ UP, yaw @ TOWARD_CAMERA
    if cls is GestureClass.PINCH:
        return _pose_flex(HALF, CURLED, CURLED, CURLED), "touch", fwd_h, DOWN
    raise ValueError(f"{cls} is not a static class")


def _place(local: np.ndarray, R: np.ndarray, wrist: np.ndarray, scale: float) -> np.ndarray:
    return wrist + (scale * local) @ R.T


def _roll(R: np.ndarray, angle: float) -> np.ndarray:
    return axis_angle_matrix(R[:, 0], angle) @ R


def _static_frames(cls, n_frames, rng, target, hand_position):
    scale = rng.uniform(0.9, 1.1)
    flex, thumb, fwd, palm = _static_spec(cls, rng)
    is_pointing = cls is GestureClass.POINTING
    flex = _jitter(flex, rng, math.radians(8), skip=("index",) if is_pointing else ())
    roll = rng.uniform(-0.25, 0.25)
    if is_pointing and target is not None:
        mcp = _random_hand_position(rng) if hand_position is None else np.asarray(hand_position, float)
        fwd = _unit(np.asarray(target, float) - mcp)
        R = _roll(frame_from(fwd, palm), roll)
        local = local_hand(flex, thumb, index_spread=0.0)
        wrist = mcp - R @ (scale * local[5])
    else:
        R = _roll(frame_from(fwd, palm), roll)
        local = local_hand(flex, thumb, index_spread=0.0 if is_pointing else None)
        wrist = _random_hand_position(rng) if hand_position is None else np.asarray(hand_position, float)
    world = _place(local, R, wrist, scale)
    return [world] * n_frames


def _dynamic_frames(cls, n_frames, rng, hand_position):
    scale = rng.uniform(0.9, 1.1)
    amp = rng.uniform(0.8, 1.2)
    yaw = _yaw(rng.uniform(-0.4, 0.4))
    wrist0 = _random_hand_position(rng) if hand_position is None else np.asarray(hand_position, float)
    jitter_deg = math.radians(6)
    out = []
    for i in range(n_frames):
        s = i / (n_frames - 1) if n_frames > 1 else 0.0
        offset = np.zeros(3)
        if cls is GestureClass.BECKONING:
            c = 0.5 * (1 - math.cos(2 * math.pi * 2 * s))
            bent = tuple(math.radians(a) * c * amp for a in (70.0, 80.0, 40.0))
            flex, thumb = _pose_flex(bent, bent, bent, bent), "extended"
            R = frame_from(yaw @ AWAY, UP)
            offset = yaw @ AWAY * (0.03 * amp * math.sin(2 * math.pi * 2 * s))
        elif cls in (GestureClass.CIRCLING_HORIZONTAL, GestureClass.CIRCLING_VERTICAL):
            flex, thumb = _pose_flex(EXTENDED, CURLED, CURLED, CURLED), "tucked"
            a = 2 * math.pi * s
            r = 0.05 * amp
            if cls is GestureClass.CIRCLING_HORIZONTAL:
                R = frame_from(DOWN, yaw @ TOWARD_CAMERA)
                offset = r * np.array([math.cos(a), 0.0, math.sin(a)])
            else:
                R = frame_from(yaw @ AWAY, DOWN)
                offset = r * np.array([math.cos(a), math.sin(a), 0.0])
        elif cls is GestureClass.HAMMERING:
            flex, thumb = _pose_flex(CURLED, CURLED, CURLED, CURLED), "tucked"
            swing = math.sin(2 * math.pi * 2 * s)
            base = frame_from(yaw @ AWAY, yaw @ np.array([-1.0, 0.0, 0.0]))
            R = axis_angle_matrix(base[:, 2], 0.45 * amp * swing) @ base
            offset = UP * (0.05 * amp * swing)
        elif cls is GestureClass.PICK_UP_MOTION:
            bent = _blend(EXTENDED, CURLED, s)
            flex, thumb = _pose_flex(bent, bent, bent, bent), "extended" if s < 0.5 else "tucked"
            R = frame_from(yaw @ AWAY, UP)
            offset = UP * (0.03 * amp * s)
        elif cls is GestureClass.RELEASE_MOTION:
            bent = _blend(CURLED, EXTENDED, s)
            flex, thumb = _pose_flex(bent, bent, bent, bent), "tucked" if s < 0.5 else "extended"
            R = frame_from(yaw @ AWAY, DOWN)
            offset = DOWN * (0.03 * amp * s)
        elif cls is GestureClass.TWISTING:
            flex, thumb = _pose_flex(EXTENDED, CURLED, CURLED, CURLED), "extended"
            base = frame_from(yaw @ AWAY, DOWN)
            R = axis_angle_matrix(base[:, 0], math.radians(90) * amp * math.sin(math.pi * s)) @ base
        else:
            raise ValueError(f"{cls} is not a dynamic class")
        flex = _jitter(flex, rng, jitter_deg)
        out.append(_place(local_hand(flex, thumb), R, wrist0 + offset, scale))
    return out


def synth_gesture(
    gesture_class: GestureClass,
    noise_sigma: float = 0.0,
    n_frames: int | None = None,
    seed: int = 0,
    *,
    target=None,
    hand_position=None,
    camera: CameraIntrinsics = DEFAULT_CAMERA,
    t0: float = 0.0,
) -> list[HandKeypoints]:
    """Generate ``n_frames`` hand frames of ``gesture_class``.

    For ``POINTING`` with a ``target``, ``hand_position`` is where the index
    MCP joint sits and the index chain is collinear with the target, so the
    noiseless pointing ray passes through it exactly. Otherwise
    ``hand_position`` is the wrist position. World keypoints receive i.i.d.
    Gaussian jitter of ``noise_sigma`` meters per coordinate; image
    coordinates are the projection of the jittered points.
    """
    gesture_class = GestureClass(gesture_class)
    if gesture_class is GestureClass.UNKNOWN:
        raise ValueError("cannot synthesize the Unknown class")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    if n_frames is None:
        n_frames = 1 if gesture_class.is_static else DEFAULT_DYNAMIC_FRAMES
    if n_frames < 1 or (gesture_class.is_dynamic and n_frames < 2):
        raise ValueError("too few frames for this class")
    rng = np.random.default_rng(seed)
    if gesture_class.is_static:
        worlds = _static_frames(gesture_class, n_frames, rng, target, hand_position)
    else:
        worlds = _dynamic_frames(gesture_class, n_frames, rng, hand_position)
    conf = float(rng.uniform(0.85, 1.0))
    frames = []
    for i, w in enumerate(worlds):
        noisy = w + rng.normal(0.0, noise_sigma, size=w.shape) if noise_sigma > 0 else w.copy()
        frames.append(HandKeypoints(project_many(noisy, camera), noisy, conf, t0 + i / FPS))
    return frames


def noise_hand(seed: int = 0, camera: CameraIntrinsics = DEFAULT_CAMERA, spread: float = 0.08) -> HandKeypoints:
    """A structureless hand: 21 points scattered around a random center."""
    rng = np.random.default_rng(seed)
    center = _random_hand_position(rng)
    world = center + rng.normal(0.0, spread, size=(21, 3))
    world[:, 2] = np.maximum(world[:, 2], 0.2)
    return HandKeypoints(project_many(world, camera), world, float(rng.uniform(0.3, 1.0)), 0.0)
