from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

N_KEYPOINTS = 21

WRIST = 0
THUMB = (1, 2, 3, 4)
INDEX = (5, 6, 7, 8)
MIDDLE = (9, 10, 11, 12)
RING = (13, 14, 15, 16)
PINKY = (17, 18, 19, 20)
PALM = (0, 5, 9, 13, 17)
FINGERTIPS = (4, 8, 12, 16, 20)


class GestureClass(str, enum.Enum):
    POINTING = "pointing"
    OPEN_PALM_UP = "open_palm_up"
    OPEN_PALM_OUT = "open_palm_out"
    FIST = "fist"
    THUMBS_UP = "thumbs_up"
    THUMBS_DOWN = "thumbs_down"
    OK = "ok"
    PINCH = "pinch"
    BECKONING = "beckoning"
    CIRCLING_HORIZONTAL = "circling_horizontal"
    CIRCLING_VERTICAL = "circling_vertical"
    HAMMERING = "hammering"
    PICK_UP_MOTION = "pick_up_motion"
    RELEASE_MOTION = "release_motion"
    TWISTING = "twisting"
    UNKNOWN = "unknown"

    @property
    def is_static(self) -> bool:
        return self in STATIC_CLASSES

    @property
    def is_dynamic(self) -> bool:
        return self in DYNAMIC_CLASSES

    @property
    def label(self) -> str:
        """Human-readable label, e.g. ``"thumbs up"``."""
        return self.value.replace("_", " ")

    @classmethod
    def parse(cls, text: str) -> "GestureClass":
        key = text.strip().lower().replace("-", " ").replace("_", " ")
        for c in cls:
            if c.label == key:
                return c
        raise ValueError(f"unknown gesture class {text!r}")


STATIC_CLASSES = (
    GestureClass.POINTING, GestureClass.OPEN_PALM_UP, GestureClass.OPEN_PALM_OUT, GestureClass.FIST,
    GestureClass.THUMBS_UP, GestureClass.THUMBS_DOWN, GestureClass.OK, GestureClass.PINCH,
)
DYNAMIC_CLASSES = (
    GestureClass.BECKONING, GestureClass.CIRCLING_HORIZONTAL, GestureClass.CIRCLING_VERTICAL,
    GestureClass.HAMMERING, GestureClass.PICK_UP_MOTION, GestureClass.RELEASE_MOTION,
    GestureClass.TWISTING,
)


@dataclass(frozen=True, eq=False)
class HandKeypoints:
    """One detected hand: 21 image-plane and 21 camera-frame keypoints."""

    image_coords: np.ndarray
    world_coords: np.ndarray
    confidence: float = 1.0
    timestamp: float = 0.0

    def __post_init__(self):
        img = np.array(self.image_coords, dtype=float)
        wld = np.array(self.world_coords, dtype=float)
        if img.shape != (N_KEYPOINTS, 2):
            raise ValueError(f"image_coords must be (21, 2), got {img.shape}")
        if wld.shape != (N_KEYPOINTS, 3):
            raise ValueError(f"world_coords must be (21, 3), got {wld.shape}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")
        img.flags.writeable = False
        wld.flags.writeable = False
        object.__setattr__(self, "image_coords", img)
        object.__setattr__(self, "world_coords", wld)
        object.__setattr__(self, "confidence", float(self.confidence))
        object.__setattr__(self, "timestamp", float(self.timestamp))

    def __eq__(self, other):
        if not isinstance(other, HandKeypoints):
            return NotImplemented
        return (np.array_equal(self.image_coords, other.image_coords)
                and np.array_equal(self.world_coords, other.world_coords)
                and self.confidence == other.confidence and self.timestamp == other.timestamp)

    def to_dict(self) -> dict:
        return {
            "image": self.image_coords.tolist(),
            "world": self.world_coords.tolist(),
            "confidence": self.confidence,
            "t": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HandKeypoints":
        return cls(np.asarray(d["image"], dtype=float), np.asarray(d["world"], dtype=float),
                   float(d.get("confidence", 1.0)), float(d.get("t", 0.0)))


@dataclass(frozen=True)
class GestureObservation:
    gesture_class: GestureClass
    confidence: float
    frames: tuple[HandKeypoints, ...] = field(repr=False)
    gesture_time: float

    def __post_init__(self):
        if not self.frames:
            raise ValueError("an observation needs at least one frame")
        object.__setattr__(self, "frames", tuple(self.frames))
        t0, t1 = self.frames[0].timestamp, self.frames[-1].timestamp
        if not (min(t0, t1) <= self.gesture_time <= max(t0, t1)):
            raise ValueError("gesture_time must lie within the frame span")

    @property
    def frame(self) -> HandKeypoints:
        """The frame nearest to ``gesture_time``."""
        return min(self.frames, key=lambda f: abs(f.timestamp - self.gesture_time))


# Gesture representations at three fidelity levels.

@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class Description:
    text: str


@dataclass(frozen=True)
class Numeric:
    observation: GestureObservation


GestureRepresentation = Union[Label, Description, Numeric]
