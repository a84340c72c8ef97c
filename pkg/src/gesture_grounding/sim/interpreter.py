"""Execute validated policy programs against a :class:`WorldState`."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import (ArityError, GraspFailure, GroundingError, MissingGesture, NoDrawerAtPos, NothingHeld,
                      PrimitiveFailure, UnknownFunction)
from ..gesture.keypoints import HandKeypoints
from ..planner.catalog import EXTENDED_CATALOG, Catalog
from ..planner.dsl import Assign, Call, Comment, Expr, Identifier, NumberLit, PolicyProgram, StringLit
from ..referent import hand_center, resolve_direction, resolve_location, resolve_object
from ..scene import Ontology, Scene, semantic_filter
from .world import WorldState

GRASP_RADIUS = 0.02
PLACE_EXACTNESS = 1e-3


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# --- perception -------------------------------------------------------------------

@dataclass
class Perception:
    """Perception functions bound to one scene snapshot and the user's hand.

    ``resolved`` records the label of every object found by pointing, in call order.
    """

    scene: Scene
    hand: HandKeypoints | None
    ontology: Ontology
    frames: Sequence[HandKeypoints] = ()
    resolved: list[str] = field(default_factory=list)

    def _need_hand(self, name: str) -> HandKeypoints:
        if self.hand is None:
            raise MissingGesture(f"{name} needs a hand gesture but none was detected")
        return self.hand

    def detect_referred_obj_pos(self, label: str) -> np.ndarray:
        entry = resolve_object(self.scene, self._need_hand("detect_referred_obj_pos"), label, self.ontology)
        self.resolved.append(entry.label)
        return entry.position.copy()

    def detect_referred_location(self) -> np.ndarray:
        return resolve_location(self.scene, self._need_hand("detect_referred_location"))

    def detect_referred_direction(self) -> np.ndarray:
        return resolve_direction(self._need_hand("detect_referred_direction"))

    def detect_hand_center_pos(self) -> np.ndarray:
        return hand_center(self._need_hand("detect_hand_center_pos"))

    def detect_obj_pos(self, label: str) -> np.ndarray:
        found = semantic_filter(label, self.ontology, self.scene.objects)
        if not found:
            raise GraspFailure(f"no {label!r} in view")
        return found[0].position.copy()

    def _centers(self) -> np.ndarray:
        frames = list(self.frames) or [self._need_hand("hand tracking")]
        return np.stack([hand_center(f) for f in frames])

    def detect_hand_trajectory(self) -> np.ndarray:
        return self._centers()

    def detect_finger_gap(self) -> float:
        h = self._need_hand("detect_finger_gap")
        return float(np.linalg.norm(h.world_coords[4] - h.world_coords[8]))

    def detect_hand_motion_direction(self) -> np.ndarray:
        c = self._centers()
        v = c[-1] - c[0]
        n = np.linalg.norm(v)
        return v / n if n > 1e-9 else resolve_direction(self._need_hand("detect_hand_motion_direction"))

    def bindings(self) -> dict[str, Callable]:
        names = [s.name for s in EXTENDED_CATALOG.perception]
        return {n: getattr(self, n) for n in names}


# --- actions --------------------------------------------------------------------------

def _nearest(items: Mapping, p: np.ndarray, radius: float, keep=lambda _: True):
    best, best_d = None, np.inf
    for key in sorted(items):
        item = items[key]
        if not keep(item):
            continue
        d = float(np.linalg.norm(item.position - p))
        if d < best_d:
            best, best_d = key, d
    return (best, best_d) if best is not None and best_d <= radius else (None, best_d)


def _move(w: WorldState, p: np.ndarray) -> None:
    w.gripper.position = np.array(p, dtype=float)
    held = w.held
    if held is not None:
        held.position = w.gripper.position.copy()


def _release(w: WorldState) -> None:
    held = w.held
    if held is not None:
        held.held = False
        held.position = w.gripper.position.copy()
    w.gripper.holding = None
    w.gripper.open = True


def _pick(w: WorldState, p: np.ndarray) -> str:
    if w.gripper.holding is not None:
        raise GraspFailure("already holding an object")
    key, d = _nearest(w.objects, p, GRASP_RADIUS)
    if key is None:
        raise GraspFailure(f"no object within {GRASP_RADIUS * 100:g} cm of the target (nearest {d:.3f} m)")
    obj = w.objects[key]
    _move(w, obj.position)
    obj.held = True
    w.gripper.holding = key
    w.gripper.open = False
    return key


def _place(w: WorldState, p: np.ndarray) -> str:
    if w.gripper.holding is None:
        raise NothingHeld("nothing to place")
    key = w.gripper.holding
    _move(w, p)
    _release(w)
    if float(np.linalg.norm(w.objects[key].position - p)) > PLACE_EXACTNESS:
        raise AssertionError("place missed its target")
    return key


def _close(w: WorldState) -> str | None:
    if w.gripper.holding is not None:
        return w.gripper.holding
    key, _ = _nearest(w.objects, w.gripper.position, GRASP_RADIUS)
    w.gripper.open = False
    if key is not None:
        _move(w, w.objects[key].position)
        w.objects[key].held = True
        w.gripper.holding = key
    return key


def _open_drawer(w: WorldState, p: np.ndarray) -> str:
    key, d = _nearest(w.drawers, p, GRASP_RADIUS)
    if key is None:
        raise NoDrawerAtPos(f"no drawer within {GRASP_RADIUS * 100:g} cm of the target (nearest {d:.3f} m)")
    _move(w, w.drawers[key].position)
    w.drawers[key].open = True
    return key


def _direction_move(w: WorldState, d: np.ndarray, dist: float) -> None:
    _move(w, w.gripper.position + np.asarray(d, dtype=float) * float(dist))


def _lift(w: WorldState, dist: float) -> None:
    _direction_move(w, np.array([0.0, -1.0, 0.0]), dist)  # +y points down


def _draw(w: WorldState, path) -> None:
    for p in np.asarray(path, dtype=float).reshape(-1, 3):
        _move(w, p)


ACTIONS: dict[str, Callable] = {
    "move_gripper_to_pos": lambda w, p: _move(w, np.asarray(p, dtype=float)),
    "move_gripper_in_direction": _direction_move,
    "open_gripper": _release,
    "close_gripper": _close,
    "pick_up_obj_at_pos": lambda w, p: _pick(w, np.asarray(p, dtype=float)),
    "place_obj_at_pos": lambda w, p: _place(w, np.asarray(p, dtype=float)),
    "open_drawer_at_pos": lambda w, p: _open_drawer(w, np.asarray(p, dtype=float)),
    "say": lambda w, text: None,
    "stop_motion": lambda w: None,
    "turn_around": lambda w: None,
    "twist_gripper": lambda w: None,
    "lift_gripper": _lift,
    "squeeze_gripper": lambda w: None,
    "pour_to_height": lambda w, h: None,
    "draw_trajectory": _draw,
    "open_door": lambda w: None,
}


# --- interpreter ------------------------------------------------------------------------

class _Run:
    def __init__(self, world: WorldState, bindings: Mapping[str, Callable], catalog: Catalog, perceive_only: bool):
        self.world = world
        self.bindings = bindings
        self.catalog = catalog
        self.perceive_only = perceive_only
        self.env: dict[str, object] = {}
        self.trace: list[dict] = []
        self.last_action: tuple[str, tuple] | None = None
        self.first_target: np.ndarray | None = None

    def fail(self, exc: GroundingError) -> GroundingError:
        exc.trace = self.trace
        exc.world = self.world
        return exc

    def eval(self, e: Expr):
        if isinstance(e, (StringLit, NumberLit)):
            return e.value
        if isinstance(e, Identifier):
            if e.name not in self.env:
                raise self.fail(UnknownFunction(f"unbound name {e.name!r}"))
            return self.env[e.name]
        return self.call(e)

    def call(self, c: Call):
        spec = self.catalog.functions.get(c.name)
        if spec is None or (c.name not in self.bindings and c.name not in ACTIONS
                            and c.name != "repeat_last_action"):
            raise self.fail(UnknownFunction(f"unknown function {c.name!r}"))
        if len(c.args) != spec.arity:
            raise self.fail(ArityError(f"{c.name} takes {spec.arity} argument(s), got {len(c.args)}"))
        args = tuple(self.eval(a) for a in c.args)
        if spec.perception:
            try:
                result = self.bindings[c.name](*args)
            except GroundingError as e:
                self.trace.append(self._entry(c.name, args, "error", error=str(e)))
                raise self.fail(e) from None
            self.trace.append(self._entry(c.name, args, "ok", result=result))
            return result
        if self.first_target is None:
            pos = [a for (_, kind), a in zip(spec.params, args) if kind.value == "position"]
            if pos:
                self.first_target = np.asarray(pos[0], dtype=float)
        if self.perceive_only:
            return None
        name, call_args = c.name, args
        if name == "repeat_last_action":
            if self.last_action is None:
                self.trace.append(self._entry(name, args, "ok"))
                return None
            name, call_args = self.last_action
        snapshot = self.world.copy()
        try:
            result = ACTIONS[name](self.world, *call_args)
        except PrimitiveFailure as e:
            self.world = snapshot  # a failed primitive leaves no trace in the world
            self.trace.append(self._entry(c.name, args, "error", error=str(e)))
            raise self.fail(e) from None
        self.world.check_invariants()
        self.last_action = (name, call_args)
        self.trace.append(self._entry(c.name, args, "ok", result=result))
        return None

    def _entry(self, name, args, outcome, result=None, error=None) -> dict:
        g = self.world.gripper
        d = {"call": name, "args": [_jsonable(a) for a in args], "outcome": outcome,
             "gripper": g.position.tolist(), "holding": g.holding}
        if result is not None:
            d["result"] = _jsonable(result)
        if error is not None:
            d["error"] = error
        return d


@dataclass
class ExecutionResult:
    trace: list[dict]
    world: WorldState
    first_target: np.ndarray | None = None


def execute(p: PolicyProgram, world: WorldState, bindings: Mapping[str, Callable],
            catalog: Catalog = EXTENDED_CATALOG, *, perceive_only: bool = False) -> ExecutionResult:
    """Run ``p`` statement by statement on a copy of ``world``.

    Primitive failures raise (with ``.trace`` and ``.world`` set to the state
    reached before the failing call); the input world is never mutated.
    With ``perceive_only`` only perception calls run, which yields the first
    position an action would act on without touching anything.
    """
    run = _Run(world.copy(), bindings, catalog, perceive_only)
    for st in p.statements:
        if isinstance(st, Comment):
            continue
        if isinstance(st, Assign):
            run.env[st.name] = run.eval(st.value)
        else:
            run.call(st.call)
    return ExecutionResult(run.trace, run.world, run.first_target)
