"""Resolve a deictic gesture to an object, a location or a direction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import EmptyCloud, NoCandidates
from .geometry import GEOM_TOL, RigidTransform, as_point, pointing_ray, ray_points_distance
from .gesture.keypoints import PALM, HandKeypoints
from .scene import ObjectEntry, Ontology, Scene, semantic_filter

# distances closer than this count as a tie; isometries perturb distances by ~1e-16
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ObjectReferent:
    entry: ObjectEntry

    def to_dict(self) -> dict:
        return {"kind": "object", "label": self.entry.label, "position": self.entry.position.tolist()}


@dataclass(frozen=True, eq=False)
class LocationReferent:
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))

    def __eq__(self, other):
        return isinstance(other, LocationReferent) and np.array_equal(self.point, other.point)

    def to_dict(self) -> dict:
        return {"kind": "location", "position": self.point.tolist()}


@dataclass(frozen=True, eq=False)
class DirectionReferent:
    vector: np.ndarray

    def __post_init__(self):
        v = as_point(self.vector)
        if abs(np.linalg.norm(v) - 1.0) > GEOM_TOL:
            raise ValueError("direction referent must be a unit vector")
        object.__setattr__(self, "vector", v)

    def __eq__(self, other):
        return isinstance(other, DirectionReferent) and np.array_equal(self.vector, other.vector)

    def to_dict(self) -> dict:
        return {"kind": "direction", "vector": self.vector.tolist()}


Referent = Union[ObjectReferent, LocationReferent, DirectionReferent]


def _tie_break(dist: np.ndarray, keys: Sequence[tuple]) -> int:
    best = float(dist.min())
    tied = np.flatnonzero(dist <= best + TIE_TOL)
    return int(min(tied, key=lambda j: keys[j]))


def resolve_object(scene: Scene, hand: HandKeypoints, target: str, ontology: Ontology,
                   semantic: Callable[[str, Sequence[ObjectEntry]], list[ObjectEntry]] | None = None) -> ObjectEntry:
    """The candidate under ``target`` nearest the pointing ray.

    Ties go to the smaller label, then the smaller (x, y, z).
    ``semantic`` overrides the ontology lookup (e.g. a completion-backed filter).
    """
    ray = pointing_ray(hand)
    cands = semantic(target, scene.objects) if semantic else semantic_filter(target, ontology, scene.objects)
    if not cands:
        raise NoCandidates(f"no object in the scene falls under {target!r}")
    dist = ray_points_distance(ray, np.stack([o.position for o in cands]))
    keys = [(o.label, *o.position.tolist()) for o in cands]
    return cands[_tie_break(dist, keys)]


def resolve_location_index(scene: Scene, hand: HandKeypoints) -> int:
    ray = pointing_ray(hand)
    if len(scene.cloud) == 0:
        raise EmptyCloud("scene has no point cloud")
    dist = ray_points_distance(ray, scene.cloud)
    best = float(dist.min())
    tied = np.flatnonzero(dist <= best + TIE_TOL)
    if len(tied) == 1:
        return int(tied[0])
    pts = scene.cloud[tied]
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    return int(tied[order[0]])


def resolve_location(scene: Scene, hand: HandKeypoints) -> np.ndarray:
    """The cloud point nearest the pointing ray."""
    return scene.cloud[resolve_location_index(scene, hand)].copy()


def resolve_direction(hand: HandKeypoints) -> np.ndarray:
    return pointing_ray(hand).direction.copy()


def hand_center(hand: HandKeypoints) -> np.ndarray:
    """Palm centroid: mean of the wrist and the four finger MCPs."""
    return hand.world_coords[list(PALM)].mean(axis=0)


def transform_hand(t: RigidTransform, hand: HandKeypoints) -> HandKeypoints:
    """Move a hand's world keypoints by ``t``.

    Image coordinates are kept as they are; referent resolution only reads
    world coordinates.
    """
    return HandKeypoints(hand.image_coords, t.apply(hand.world_coords), hand.confidence, hand.timestamp)


def resolve(scene: Scene, hand: HandKeypoints, mode: str, target: str | None = None,
            ontology: Ontology | None = None) -> Referent:
    """Dispatch on ``mode`` in {object, location, direction}."""
    if mode == "object":
        if target is None or ontology is None:
            raise ValueError("object mode needs a target label and an ontology")
        return ObjectReferent(resolve_object(scene, hand, target, ontology))
    if mode == "location":
        return LocationReferent(resolve_location(scene, hand))
    if mode == "direction":
        return DirectionReferent(resolve_direction(hand))
    raise ValueError(f"unknown referent mode {mode!r}")
