"""Kinematic tabletop state: objects, drawers, a gripper and the user's hand."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..geometry import as_point
from ..gesture.keypoints import HandKeypoints
from ..scene import ObjectEntry, Scene

GRIPPER_HOME = (0.0, -0.3, 0.6)


@dataclass
class SimObject:
    label: str
    position: np.ndarray
    held: bool = False


@dataclass
class Drawer:
    label: str
    position: np.ndarray
    open: bool = False


@dataclass
class Gripper:
    position: np.ndarray
    open: bool = True
    holding: str | None = None


@dataclass
class WorldState:
    objects: dict[str, SimObject] = field(default_factory=dict)
    drawers: dict[str, Drawer] = field(default_factory=dict)
    gripper: Gripper = field(default_factory=lambda: Gripper(np.array(GRIPPER_HOME)))
    human_hand: HandKeypoints | None = None

    @classmethod
    def from_scene(cls, scene: Scene, gripper_home=GRIPPER_HOME) -> "WorldState":
        """Labels starting with ``drawer`` become drawers; everything else is a movable object."""
        objects: dict[str, SimObject] = {}
        drawers: dict[str, Drawer] = {}
        for k, o in enumerate(scene.objects):
            if o.label.startswith("drawer"):
                key = o.label if o.label not in drawers else f"{o.label}#{k}"
                drawers[key] = Drawer(o.label, o.position.copy())
            else:
                objects[f"obj_{k}"] = SimObject(o.label, o.position.copy())
        return cls(objects, drawers, Gripper(as_point(gripper_home).copy()))

    def copy(self) -> "WorldState":
        # hands are immutable; share them instead of copying their arrays
        hand, self.human_hand = self.human_hand, None
        try:
            dup = copy.deepcopy(self)
        finally:
            self.human_hand = hand
        dup.human_hand = hand
        return dup

    @property
    def held(self) -> SimObject | None:
        return self.objects.get(self.gripper.holding) if self.gripper.holding else None

    def check_invariants(self) -> None:
        held = [k for k, o in self.objects.items() if o.held]
        if len(held) > 1:
            raise AssertionError(f"more than one object held: {held}")
        if held != ([self.gripper.holding] if self.gripper.holding else []):
            raise AssertionError("gripper holding and object held flags disagree")
        if held and not np.array_equal(self.objects[held[0]].position, self.gripper.position):
            raise AssertionError("held object does not track the gripper")

    def scene_objects(self) -> list[ObjectEntry]:
        """Perceivable entries: free objects and drawers (held objects are in the gripper)."""
        out = [ObjectEntry(o.label, o.position) for o in self.objects.values() if not o.held]
        out += [ObjectEntry(d.label, d.position) for d in self.drawers.values()]
        return out

    def perceived_scene(self, base: Scene) -> Scene:
        objs = self.scene_objects()
        centers = np.stack([o.position for o in objs]) if objs else np.empty((0, 3))
        return Scene(tuple(objs), np.concatenate([base.cloud, centers]), base.camera, base.frame_tag)

    def to_dict(self) -> dict:
        return {
            "objects": {k: {"label": o.label, "position": o.position.tolist(), "held": o.held}
                        for k, o in sorted(self.objects.items())},
            "drawers": {k: {"label": d.label, "position": d.position.tolist(), "open": d.open}
                        for k, d in sorted(self.drawers.items())},
            "gripper": {"position": self.gripper.position.tolist(), "open": self.gripper.open,
                        "holding": self.gripper.holding},
        }

    def fingerprint(self) -> bytes:
        """Bytes that change whenever any state field changes."""
        parts = [repr(self.to_dict()).encode()]
        if self.human_hand is not None:
            parts.append(self.human_hand.world_coords.tobytes())
        return b"|".join(parts)
