"""Scripted end-to-end runs: synthesize, classify, plan, confirm, execute, score."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import GroundingError, InvariantViolation, ParseError
from ..geometry import as_point
from ..gesture.classifier import GestureModels, classify
from ..gesture.keypoints import GestureClass, GestureObservation, HandKeypoints
from ..gesture.synth import synth_gesture
from ..planner.backends import complete, make_backend
from ..planner.catalog import BASE_CATALOG, EXTENDED_CATALOG, Catalog
from ..planner.dialog import (MAX_TRIALS, Acknowledge, Answer, DialogState, Execute, ExecutionFinished, Heard,
                              Indicate, Phase, PlanFailed, PlanReady, Retry, Say, dialog_step)
from ..planner.dsl import parse_policy, validate_policy
from ..planner.instruction import Instruction, representation_for, textualize_instruction
from ..planner.prompt import load_context, assemble_prompt
from ..referent import hand_center
from ..scene import SceneSpec, default_ontology, generate_scene
from .goals import GoalSpec, check_goal, goal_from_dict, goal_to_dict
from .interpreter import Perception, execute
from .world import WorldState

FORMAT_VERSION = 1
CONFIRM_RADIUS = 0.02
HAND_REFERENT = "hand"
# default pointing hand: in front of the target, toward the camera and slightly raised
DEFAULT_HAND_OFFSET = (0.05, -0.1, -0.6)
FIDELITIES = ("label", "description", "numeric")
CLASSIFIERS = ("models", "oracle")


@lru_cache(maxsize=1)
def shipped_models() -> GestureModels:
    """Classifier weights trained with the default configuration and seed 0."""
    with resources.as_file(resources.files("gesture_grounding").joinpath("data/gesture_models.npz")) as p:
        return GestureModels.load(p)


@dataclass(frozen=True)
class GestureScript:
    """How the simulated user gestures for one instruction.

    ``target`` is an object label/id or a point; it aims pointing gestures.
    ``hand_position`` is the index MCP for aimed pointing, else the wrist.
    """

    gesture_class: GestureClass
    target: str | tuple[float, float, float] | None = None
    hand_position: tuple[float, float, float] | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    n_frames: int | None = None

    def to_dict(self) -> dict:
        t = self.target if self.target is None or isinstance(self.target, str) else list(self.target)
        return {"class": self.gesture_class.value, "target": t,
                "hand_position": None if self.hand_position is None else list(self.hand_position),
                "noise_sigma": self.noise_sigma, "seed": self.seed, "n_frames": self.n_frames}


@dataclass(frozen=True)
class ScriptStep:
    speech: str
    gesture: GestureScript | None = None
    referent: str | None = None  # object label/id, "hand", or None (nothing to confirm)

    def to_dict(self) -> dict:
        return {"speech": self.speech, "gesture": None if self.gesture is None else self.gesture.to_dict(),
                "referent": self.referent}


@dataclass(frozen=True)
class PlannerChoice:
    backend: str = "rule"
    store: str | None = None
    url: str | None = None
    timeout: float = 30.0
    catalog: str = "base"

    def make(self):
        return make_backend(self.backend, store=self.store, url=self.url, timeout=self.timeout)

    @property
    def catalog_obj(self) -> Catalog:
        return EXTENDED_CATALOG if self.catalog == "extended" else BASE_CATALOG


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    scene: SceneSpec
    script: tuple[ScriptStep, ...]
    goal: GoalSpec
    planner: PlannerChoice = field(default_factory=PlannerChoice)
    fidelity: str = "label"
    classifier: str = "models"
    max_trials: int = MAX_TRIALS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "script", tuple(self.script))
        if not self.script:
            raise InvariantViolation("script", "must contain at least one instruction")
        if self.fidelity not in FIDELITIES:
            raise InvariantViolation("fidelity", f"must be one of {FIDELITIES}")
        if self.classifier not in CLASSIFIERS:
            raise InvariantViolation("classifier", f"must be one of {CLASSIFIERS}")
        if not 1 <= self.max_trials <= MAX_TRIALS:
            raise InvariantViolation("max_trials", f"must lie in 1..{MAX_TRIALS}")

    def to_dict(self) -> dict:
        p = self.planner
        return {"format_version": FORMAT_VERSION, "id": self.id, "seed": self.seed, "scene": self.scene.to_dict(),
                "script": [s.to_dict() for s in self.script], "goal": goal_to_dict(self.goal),
                "planner": {"backend": p.backend, "store": p.store, "url": p.url, "timeout": p.timeout,
                            "catalog": p.catalog},
                "fidelity": self.fidelity, "classifier": self.classifier, "max_trials": self.max_trials}


@dataclass
class Metrics:
    id: str
    planning_success: bool
    execution_success: bool
    trials_used: int
    trace: list[dict]

    def __post_init__(self):
        if self.execution_success and not self.planning_success:
            raise AssertionError("execution success without planning success")

    def to_dict(self) -> dict:
        return {"id": self.id, "planning_success": self.planning_success,
                "execution_success": self.execution_success, "trials_used": self.trials_used, "trace": self.trace}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


# --- spec parsing -------------------------------------------------------------------

def _opt_point(v, path):
    if v is None:
        return None
    try:
        return tuple(float(x) for x in as_point(v))
    except (ValueError, TypeError):
        raise InvariantViolation(path, "expected a 3-vector") from None


def _gesture_from_dict(d, path: str) -> GestureScript:
    if not isinstance(d, dict):
        raise InvariantViolation(path, "expected an object")
    try:
        cls = GestureClass.parse(str(d["class"]))
    except KeyError:
        raise InvariantViolation(f"{path}.class", "missing field") from None
    except ValueError as e:
        raise InvariantViolation(f"{path}.class", str(e)) from None
    if cls is GestureClass.UNKNOWN:
        raise InvariantViolation(f"{path}.class", "cannot script the unknown class")
    t = d.get("target")
    target = t if t is None or isinstance(t, str) else _opt_point(t, f"{path}.target")
    sigma = float(d.get("noise_sigma", 0.0))
    if sigma < 0:
        raise InvariantViolation(f"{path}.noise_sigma", "must be non-negative")
    n = d.get("n_frames")
    return GestureScript(cls, target, _opt_point(d.get("hand_position"), f"{path}.hand_position"), sigma,
                         int(d.get("seed", 0)), None if n is None else int(n))


def scenario_from_dict(d, base_dir: Path | None = None) -> ScenarioSpec:
    """Build a spec; relative transcript stores resolve against ``base_dir``."""
    if not isinstance(d, dict):
        raise InvariantViolation("", "expected an object")
    if d.get("format_version") != FORMAT_VERSION:
        raise InvariantViolation("format_version", f"expected {FORMAT_VERSION}")
    for key in ("id", "scene", "script", "goal"):
        if key not in d:
            raise InvariantViolation(key, "missing field")
    if not isinstance(d["script"], list):
        raise InvariantViolation("script", "expected a list")
    steps = []
    for k, s in enumerate(d["script"]):
        path = f"script[{k}]"
        if not isinstance(s, dict) or not isinstance(s.get("speech"), str):
            raise InvariantViolation(f"{path}.speech", "expected a string")
        g = s.get("gesture")
        steps.append(ScriptStep(s["speech"], None if g is None else _gesture_from_dict(g, f"{path}.gesture"),
                                s.get("referent")))
    p = d.get("planner", {})
    store = p.get("store")
    if store is not None and base_dir is not None and not Path(store).is_absolute():
        store = str((base_dir / store).resolve())
    if p.get("catalog", "base") not in ("base", "extended"):
        raise InvariantViolation("planner.catalog", "must be base or extended")
    planner = PlannerChoice(p.get("backend", "rule"), store, p.get("url"), float(p.get("timeout", 30.0)),
                            p.get("catalog", "base"))
    return ScenarioSpec(str(d["id"]), SceneSpec.from_dict(d["scene"]), tuple(steps), goal_from_dict(d["goal"]),
                        planner, d.get("fidelity", "label"), d.get("classifier", "models"),
                        int(d.get("max_trials", MAX_TRIALS)), int(d.get("seed", 0)))


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path.name}: {e.msg}", e.lineno, e.colno) from None
    return scenario_from_dict(d, path.parent)


# --- running ---------------------------------------------------------------------

def _gesture_seed(spec: ScenarioSpec, g: GestureScript, step: int, trial: int) -> int:
    return int(np.random.SeedSequence([spec.seed, g.seed, step, trial]).generate_state(1)[0])


def _object_position(world: WorldState, ref: str) -> np.ndarray | None:
    if ref in world.objects:
        return world.objects[ref].position
    if ref in world.drawers:
        return world.drawers[ref].position
    for _, o in sorted(world.objects.items()):
        if o.label == ref and not o.held:
            return o.position
    for _, dr in sorted(world.drawers.items()):
        if dr.label == ref:
            return dr.position
    return None


def _synthesize(spec: ScenarioSpec, g: GestureScript, world: WorldState, step: int, trial: int,
                t0: float) -> list[HandKeypoints]:
    target = g.target
    if isinstance(target, str):
        target = _object_position(world, target)
        if target is None:
            raise InvariantViolation(f"script[{step}].gesture.target", f"no object {g.target!r} in the world")
    hand = g.hand_position
    if g.gesture_class is GestureClass.POINTING and target is not None and hand is None:
        hand = np.asarray(target, float) + np.asarray(DEFAULT_HAND_OFFSET)
    return synth_gesture(g.gesture_class, g.noise_sigma, g.n_frames, _gesture_seed(spec, g, step, trial),
                         target=target, hand_position=hand, camera=spec.scene.camera, t0=t0)


def _observe(spec: ScenarioSpec, g: GestureScript, frames: list[HandKeypoints]) -> GestureObservation:
    if spec.classifier == "oracle":
        return GestureObservation(g.gesture_class, 1.0, tuple(frames), frames[(len(frames) - 1) // 2].timestamp)
    return classify(shipped_models(), frames)


def _truth(world: WorldState, ref: str | None) -> np.ndarray | None:
    if ref is None:
        return None
    if ref == HAND_REFERENT:
        return None if world.human_hand is None else hand_center(world.human_hand)
    return _object_position(world, ref)


def _stamp(world: WorldState) -> str:
    return hashlib.sha256(world.fingerprint()).hexdigest()[:16]


class _Recorder:
    def __init__(self):
        self.trace: list[dict] = []

    def add(self, trial: int, step: int, kind: str, world: WorldState, **fields):
        d = {"trial": trial, "step": step, "kind": kind, "world": _stamp(world)}
        d.update(fields)
        self.trace.append(d)

    def effects(self, trial, step, world, effects):
        for e in effects:
            if isinstance(e, Say):
                self.add(trial, step, "say", world, text=e.text)
            elif isinstance(e, Indicate):
                self.add(trial, step, "indicate", world,
                         target=None if e.target is None else [float(v) for v in e.target])
            elif isinstance(e, Execute):
                self.add(trial, step, "execute", world)

    def phase(self, trial, step, world, state: DialogState):
        self.add(trial, step, "phase", world, phase=state.phase.value)


def run_scenario(spec: ScenarioSpec, *, backend=None, context=None, ontology=None) -> Metrics:
    """Run ``spec`` until the script completes or the trial budget is spent.

    A failed or rejected step is retried (new gesture sample, same world)
    while trials remain; the budget is shared across the whole script.
    """
    backend = spec.planner.make() if backend is None else backend
    catalog = spec.planner.catalog_obj
    context = load_context(None, catalog) if context is None else context.with_catalog(catalog)
    ontology = default_ontology() if ontology is None else ontology
    base = generate_scene(spec.scene)
    world = WorldState.from_scene(base)
    rec = _Recorder()
    history: list[str] = []
    trial, step = 1, 0
    confirmed = [False] * len(spec.script)
    done = False
    t_clock = 0.0
    while not done:
        s = spec.script[step]
        # the user performs the gesture while speaking
        frames = _synthesize(spec, s.gesture, world, step, trial, t_clock) if s.gesture else []
        obs = _observe(spec, s.gesture, frames) if frames else None
        if obs is not None:
            world.human_hand = obs.frame
        rep = representation_for(obs, spec.fidelity)
        instr = Instruction.from_text(s.speech, start=t_clock, gesture=rep,
                                      gesture_time=None if obs is None else obs.gesture_time)
        t_clock += 10.0
        block = textualize_instruction(instr, step)
        rec.add(trial, step, "gesture", world,
                observed=None if obs is None else obs.gesture_class.value,
                confidence=None if obs is None else round(obs.confidence, 6))

        state = DialogState(Phase.IDLE, trial=trial)
        state, eff = dialog_step(state, Heard(instr))
        rec.phase(trial, step, world, state)
        rec.effects(trial, step, world, eff)
        state, eff = dialog_step(state, Acknowledge())
        rec.phase(trial, step, world, state)

        perception = Perception(world.perceived_scene(base), world.human_hand, ontology, tuple(frames))
        program = code = None
        try:
            prompt = assemble_prompt(context, block, history=history)
            code = complete(backend, prompt)
            program = parse_policy(code)
            problems = validate_policy(program, catalog)
            if problems:
                raise InvariantViolation(f"line {problems[0].line}", problems[0].message)
            dry = execute(program, world, perception.bindings(), catalog, perceive_only=True)
            event = PlanReady(dry.first_target)
        except GroundingError as e:
            event = PlanFailed(f"{e.code}: {e}")
        if code is not None:
            rec.add(trial, step, "plan", world, code=code)
        state, eff = dialog_step(state, event)
        rec.phase(trial, step, world, state)
        rec.effects(trial, step, world, eff)

        if state.phase is Phase.INDICATING:
            state, eff = dialog_step(state, Acknowledge())
            rec.phase(trial, step, world, state)
            rec.effects(trial, step, world, eff)
            truth = _truth(world, s.referent)
            if s.referent is None:
                yes = True
            else:
                yes = (truth is not None and state.target is not None
                       and float(np.linalg.norm(np.asarray(state.target) - truth)) <= CONFIRM_RADIUS)
            state, eff = dialog_step(state, Answer(yes))
            rec.phase(trial, step, world, state)
            rec.effects(trial, step, world, eff)

        if state.phase is Phase.EXECUTING:
            confirmed[step] = True
            try:
                result = execute(program, world, perception.bindings(), catalog)
                world, calls, event = result.world, result.trace, ExecutionFinished(True)
            except GroundingError as e:
                world = getattr(e, "world", None) or world
                calls = getattr(e, "trace", [])
                event = ExecutionFinished(False, f"{e.code}: {e}")
            for c in calls:
                rec.add(trial, step, "call", world, **c)
            state, eff = dialog_step(state, event)
            rec.phase(trial, step, world, state)
            rec.effects(trial, step, world, eff)

        if state.phase is Phase.DONE and state.success:
            history.append(block + "\n" + code.strip("\n"))
            if step + 1 == len(spec.script):
                done = True
            else:
                step += 1
            continue
        if trial >= spec.max_trials:
            done = True
        else:
            state, _ = dialog_step(state, Retry())
            trial = state.trial
    finished = state.phase is Phase.DONE and bool(state.success) and step + 1 == len(spec.script)
    planning = all(confirmed)
    reached = finished and check_goal(world, spec.goal)
    rec.add(trial, step, "goal", world, reached=bool(reached))
    return Metrics(spec.id, planning, bool(reached and planning), trial, rec.trace)


# --- reports ------------------------------------------------------------------------

CSV_FIELDS = ("id", "planning_success", "execution_success", "trials_used")


def metrics_csv(rows: Sequence[Metrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for m in rows:
        w.writerow([m.id, str(m.planning_success).lower(), str(m.execution_success).lower(), m.trials_used])
    return buf.getvalue()


def run_batch(directory, **kwargs) -> list[Metrics]:
    """Run every ``*.json`` scenario in ``directory`` in file-name order."""
    paths = sorted(Path(directory).glob("*.json"))
    return [run_scenario(load_scenario(p), **kwargs) for p in paths]


def packaged_scenario(name: str) -> Path:
    with resources.as_file(resources.files("gesture_grounding").joinpath(f"data/scenarios/{name}.json")) as p:
        return Path(p)
