"""Perception functions and action primitives a policy program may call."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping


class Kind(str, enum.Enum):
    POSITION = "position"
    DIRECTION = "direction"
    SCALAR = "scalar"
    STRING = "string"
    TRAJECTORY = "trajectory"


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    params: tuple[tuple[str, Kind], ...]
    returns: Kind | None
    doc: str
    perception: bool = False

    @property
    def arity(self) -> int:
        return len(self.params)

    def signature(self) -> str:
        args = ", ".join(f"{n}: {k.value}" for n, k in self.params)
        ret = self.returns.value if self.returns else "None"
        return f"{self.name}({args}) -> {ret}"


@dataclass(frozen=True)
class Catalog:
    functions: Mapping[str, FunctionSpec]

    def __post_init__(self):
        object.__setattr__(self, "functions", dict(self.functions))

    @classmethod
    def of(cls, specs: Iterable[FunctionSpec]) -> "Catalog":
        out: dict[str, FunctionSpec] = {}
        for s in specs:
            if s.name in out:
                raise ValueError(f"duplicate catalog entry {s.name!r}")
            out[s.name] = s
        return cls(out)

    def __contains__(self, name: str) -> bool:
        return name in self.functions

    def __getitem__(self, name: str) -> FunctionSpec:
        return self.functions[name]

    def __iter__(self):
        return iter(self.functions.values())

    def __len__(self) -> int:
        return len(self.functions)

    def extend(self, specs: Iterable[FunctionSpec]) -> "Catalog":
        return Catalog.of([*self.functions.values(), *specs])

    @property
    def perception(self) -> list[FunctionSpec]:
        return [s for s in self if s.perception]

    @property
    def actions(self) -> list[FunctionSpec]:
        return [s for s in self if not s.perception]


P, D, S, T, X = Kind.POSITION, Kind.DIRECTION, Kind.SCALAR, Kind.STRING, Kind.TRAJECTORY


def _f(name, params, returns, doc, perception=False) -> FunctionSpec:
    return FunctionSpec(name, tuple(params), returns, doc, perception)


PERCEPTION = (
    _f("detect_referred_obj_pos", [("label", T)], P,
       "position of the object under `label` that the user points at", True),
    _f("detect_referred_location", [], P, "point in the scene that the user points at", True),
    _f("detect_referred_direction", [], D, "unit direction the user points in", True),
    _f("detect_hand_center_pos", [], P, "center of the user's palm", True),
)

ACTIONS = (
    _f("move_gripper_to_pos", [("pos", P)], None, "move the gripper to `pos`"),
    _f("move_gripper_in_direction", [("direction", D), ("distance", S)], None,
       "move the gripper `distance` meters along `direction`"),
    _f("open_gripper", [], None, "open the gripper, releasing anything held"),
    _f("close_gripper", [], None, "close the gripper, grasping an object at the gripper if there is one"),
    _f("pick_up_obj_at_pos", [("pos", P)], None, "grasp and lift the object at `pos`"),
    _f("place_obj_at_pos", [("pos", P)], None, "put the held object down at `pos`"),
    _f("open_drawer_at_pos", [("pos", P)], None, "open the drawer whose handle is at `pos`"),
    _f("say", [("text", T)], None, "speak `text` to the user"),
)

BASE_CATALOG = Catalog.of(PERCEPTION + ACTIONS)

# Extra entries used only when evaluating the wider gesture-instruction set.
EXTENDED_PERCEPTION = (
    _f("detect_obj_pos", [("label", T)], P, "position of an object named `label`, no gesture needed", True),
    _f("detect_hand_trajectory", [], X, "path traced by the user's hand", True),
    _f("detect_finger_gap", [], S, "distance between the user's thumb and index finger tips", True),
    _f("detect_hand_motion_direction", [], D, "direction the user's hand moved in", True),
)

EXTENDED_ACTIONS = (
    _f("stop_motion", [], None, "stop moving immediately"),
    _f("turn_around", [], None, "turn the robot around"),
    _f("twist_gripper", [], None, "rotate the gripper to twist what it holds"),
    _f("lift_gripper", [("distance", S)], None, "raise the gripper by `distance` meters"),
    _f("squeeze_gripper", [], None, "squeeze what the gripper holds"),
    _f("pour_to_height", [("height", S)], None, "pour from the held container up to `height` meters"),
    _f("draw_trajectory", [("path", X)], None, "trace `path` with the held pen"),
    _f("repeat_last_action", [], None, "repeat the previous action"),
    _f("open_door", [], None, "open the door"),
)

EXTENDED_CATALOG = BASE_CATALOG.extend(EXTENDED_PERCEPTION + EXTENDED_ACTIONS)

# perception results that depend on a visible hand gesture
GESTURE_PERCEPTION = frozenset({
    "detect_referred_obj_pos", "detect_referred_location", "detect_referred_direction",
    "detect_hand_center_pos", "detect_hand_trajectory", "detect_finger_gap", "detect_hand_motion_direction",
})

# argument kind reported when scoring a call, keyed by the perception function that produced it
ARGUMENT_KIND = {
    "detect_referred_obj_pos": "referred_object",
    "detect_referred_location": "referred_location",
    "detect_referred_direction": "referred_direction",
    "detect_hand_center_pos": "hand_center",
    "detect_obj_pos": "object_position",
    "detect_hand_trajectory": "hand_trajectory",
    "detect_finger_gap": "finger_gap",
    "detect_hand_motion_direction": "hand_motion_direction",
}
