"""Pointing accuracy over object spacing and user distance."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ..geometry import DEFAULT_CAMERA, CameraIntrinsics
from ..gesture.keypoints import GestureClass
from ..gesture.synth import synth_gesture
from ..referent import resolve_object
from ..scene import ObjectEntry, Ontology, Scene

ROW_LABEL = "cup"
ROW_CENTER = (0.0, 0.2, 2.2)
# user stands in front of the row, toward the camera, slightly to the side and above
APPROACH = (0.15, -0.25, -1.0)


@dataclass(frozen=True)
class SweepConfig:
    spacings: tuple[float, ...] = (0.05, 0.15, 0.30)
    distances: tuple[float, ...] = (0.5, 1.0, 1.5)
    noise_sigma: float = 0.003
    trials: int = 500
    seed: int = 0
    camera: CameraIntrinsics = DEFAULT_CAMERA

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if any(s <= 0 for s in self.spacings) or any(d <= 0 for d in self.distances):
            raise ValueError("spacings and distances must be positive")


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    correct: np.ndarray  # (n_spacings, n_distances) counts

    @property
    def accuracy(self) -> np.ndarray:
        return self.correct / self.config.trials

    def to_dict(self) -> dict:
        c = self.config
        return {"spacings": list(c.spacings), "distances": list(c.distances), "noise_sigma": c.noise_sigma,
                "trials": c.trials, "seed": c.seed, "correct": self.correct.tolist(),
                "accuracy": self.accuracy.tolist()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["spacing", "distance", "correct", "trials", "accuracy"])
        for i, s in enumerate(self.config.spacings):
            for j, d in enumerate(self.config.distances):
                w.writerow([s, d, int(self.correct[i, j]), self.config.trials, repr(float(self.accuracy[i, j]))])
        return buf.getvalue()


def row_scene(spacing: float, camera: CameraIntrinsics = DEFAULT_CAMERA) -> Scene:
    """Three same-label objects in a row along x; the middle one is the target."""
    c = np.asarray(ROW_CENTER)
    objs = tuple(ObjectEntry(ROW_LABEL, c + np.array([k * spacing, 0.0, 0.0])) for k in (-1, 0, 1))
    return Scene(objs, np.stack([o.position for o in objs]), camera)


def hand_anchor(distance: float) -> np.ndarray:
    """Index MCP position ``distance`` meters from the row center."""
    u = np.asarray(APPROACH, dtype=float)
    return np.asarray(ROW_CENTER) + distance * u / np.linalg.norm(u)


def trial_seed(seed: int, cell: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, cell, trial]).generate_state(1)[0])


def spacing_distance_sweep(config: SweepConfig = SweepConfig()) -> SweepResult:
    """Fraction of noisy pointing gestures at the middle object that resolve to it, per cell."""
    ontology = Ontology({})
    correct = np.zeros((len(config.spacings), len(config.distances)), dtype=int)
    for i, spacing in enumerate(config.spacings):
        scene = row_scene(spacing, config.camera)
        target = scene.objects[1].position
        for j, dist in enumerate(config.distances):
            cell = i * len(config.distances) + j
            anchor = hand_anchor(dist)
            hits = 0
            for t in range(config.trials):
                hand = synth_gesture(GestureClass.POINTING, config.noise_sigma, 1, trial_seed(config.seed, cell, t),
                                     target=target, hand_position=anchor, camera=config.camera)[0]
                got = resolve_object(scene, hand, ROW_LABEL, ontology)
                hits += bool(np.array_equal(got.position, target))
            correct[i, j] = hits
    return SweepResult(config, correct)
