"""Goal predicates over a :class:`WorldState`."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import InvariantViolation
from ..geometry import as_point
from ..referent import hand_center
from .world import WorldState

DEFAULT_TOLERANCE = 0.02


def _positive(tol: float) -> float:
    tol = float(tol)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    return tol


def _object_keys(world: WorldState, ref: str) -> list[str]:
    if ref in world.objects:
        return [ref]
    return sorted(k for k, o in world.objects.items() if o.label == ref)


@dataclass(frozen=True)
class ObjectAtHand:
    """An object (id or label) was released within ``tolerance`` of the user's palm center."""

    object: str
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "tolerance", _positive(self.tolerance))


@dataclass(frozen=True)
class DrawerOpen:
    drawer: str


@dataclass(frozen=True)
class ObjectAt:
    object: str
    position: tuple[float, float, float]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in as_point(self.position)))
        object.__setattr__(self, "tolerance", _positive(self.tolerance))


@dataclass(frozen=True)
class GripperNear:
    position: tuple[float, float, float]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in as_point(self.position)))
        object.__setattr__(self, "tolerance", _positive(self.tolerance))


GoalSpec = Union[ObjectAtHand, DrawerOpen, ObjectAt, GripperNear]


def check_goal(world: WorldState, goal: GoalSpec) -> bool:
    if isinstance(goal, ObjectAtHand):
        if world.human_hand is None:
            return False
        c = hand_center(world.human_hand)
        return any(not world.objects[k].held
                   and np.linalg.norm(world.objects[k].position - c) <= goal.tolerance
                   for k in _object_keys(world, goal.object))
    if isinstance(goal, DrawerOpen):
        d = world.drawers.get(goal.drawer)
        return bool(d is not None and d.open)
    if isinstance(goal, ObjectAt):
        p = np.asarray(goal.position)
        return any(np.linalg.norm(world.objects[k].position - p) <= goal.tolerance
                   for k in _object_keys(world, goal.object))
    if isinstance(goal, GripperNear):
        return bool(np.linalg.norm(world.gripper.position - np.asarray(goal.position)) <= goal.tolerance)
    raise TypeError(f"not a goal: {goal!r}")


def goal_to_dict(goal: GoalSpec) -> dict:
    if isinstance(goal, ObjectAtHand):
        return {"type": "object_at_hand", "object": goal.object, "tolerance": goal.tolerance}
    if isinstance(goal, DrawerOpen):
        return {"type": "drawer_open", "drawer": goal.drawer}
    if isinstance(goal, ObjectAt):
        return {"type": "object_at", "object": goal.object, "position": list(goal.position),
                "tolerance": goal.tolerance}
    if isinstance(goal, GripperNear):
        return {"type": "gripper_near", "position": list(goal.position), "tolerance": goal.tolerance}
    raise TypeError(f"not a goal: {goal!r}")


def goal_from_dict(d, path: str = "goal") -> GoalSpec:
    if not isinstance(d, dict):
        raise InvariantViolation(path, "expected an object")
    kind = d.get("type")
    try:
        if kind == "object_at_hand":
            return ObjectAtHand(str(d["object"]), d.get("tolerance", DEFAULT_TOLERANCE))
        if kind == "drawer_open":
            return DrawerOpen(str(d["drawer"]))
        if kind == "object_at":
            return ObjectAt(str(d["object"]), d["position"], d.get("tolerance", DEFAULT_TOLERANCE))
        if kind == "gripper_near":
            return GripperNear(d["position"], d.get("tolerance", DEFAULT_TOLERANCE))
    except KeyError as e:
        raise InvariantViolation(f"{path}.{e.args[0]}", "missing field") from None
    except (TypeError, ValueError) as e:
        raise InvariantViolation(path, str(e)) from None
    raise InvariantViolation(f"{path}.type", f"unknown goal type {kind!r}")
