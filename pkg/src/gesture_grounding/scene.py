"""Scenes as labeled object sets plus a point cloud, and the semantic filter."""
from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence, Union

import numpy as np

from .errors import InvalidSpec, InvariantViolation, ParseError, SemanticFilterRejected
from .geometry import DEFAULT_CAMERA, CameraIntrinsics, as_point

FORMAT_VERSION = 1
CLOUD_MEMBER_TOL = 1e-6
CLOUD_GRID = 0.01


@dataclass(frozen=True, eq=False)
class ObjectEntry:
    label: str
    position: np.ndarray

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label.strip():
            raise ValueError("object label must be a non-empty string")
        p = as_point(self.position)
        p.flags.writeable = False
        object.__setattr__(self, "position", p)

    def __eq__(self, other):
        if not isinstance(other, ObjectEntry):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.position, other.position)

    def __hash__(self):
        return hash((self.label, self.position.tobytes()))

    def __repr__(self):
        x, y, z = self.position
        return f"ObjectEntry({self.label!r}, ({x:.4g}, {y:.4g}, {z:.4g}))"

    def to_dict(self) -> dict:
        return {"label": self.label, "pos": self.position.tolist()}


@dataclass(frozen=True, eq=False)
class Scene:
    objects: tuple[ObjectEntry, ...]
    cloud: np.ndarray
    camera: CameraIntrinsics = DEFAULT_CAMERA
    frame_tag: str = "camera"

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        cloud = np.asarray(self.cloud, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(cloud)):
            raise ValueError("cloud has non-finite points")
        cloud.flags.writeable = False
        object.__setattr__(self, "cloud", cloud)
        missing = _missing_from_cloud(self.objects, cloud)
        if missing:
            raise ValueError(f"object {missing[0]} is not a member of the point cloud")

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return (self.objects == other.objects and np.array_equal(self.cloud, other.cloud)
                and self.camera == other.camera and self.frame_tag == other.frame_tag)

    @property
    def labels(self) -> list[str]:
        return [o.label for o in self.objects]

    def find(self, label: str) -> ObjectEntry:
        for o in self.objects:
            if o.label == label:
                return o
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "frame_tag": self.frame_tag,
            "camera": self.camera.to_dict(),
            "objects": [o.to_dict() for o in self.objects],
            "cloud": self.cloud.tolist(),
        }

    def transformed(self, t) -> "Scene":
        """The same scene seen through rigid transform ``t``."""
        objs = tuple(ObjectEntry(o.label, t.apply(o.position)) for o in self.objects)
        return Scene(objs, t.apply(self.cloud), self.camera, self.frame_tag)


def _missing_from_cloud(objects: Sequence[ObjectEntry], cloud: np.ndarray) -> list[int]:
    if not objects:
        return []
    if len(cloud) == 0:
        return list(range(len(objects)))
    P = np.stack([o.position for o in objects])
    missing = []
    for i, p in enumerate(P):
        if np.min(np.sum((cloud - p) ** 2, axis=1)) > CLOUD_MEMBER_TOL ** 2:
            missing.append(i)
    return missing


# --- ontology ----------------------------------------------------------------

@dataclass(frozen=True)
class Ontology:
    """Category label -> object labels it covers.

    Entries may be shell-style patterns (``drawer_*``) so one category can
    cover generated label families. Every label also covers itself.
    """

    categories: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        cats = {str(k).strip().lower(): frozenset(str(v) for v in vs) for k, vs in dict(self.categories).items()}
        object.__setattr__(self, "categories", cats)

    def __call__(self, target: str) -> frozenset[str]:
        key = target.strip().lower()
        return frozenset({target, key}) | self.categories.get(key, frozenset())

    def matches(self, target: str, label: str) -> bool:
        return any(label == p or fnmatch.fnmatchcase(label, p) for p in self(target))

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION,
                "categories": {k: sorted(v) for k, v in sorted(self.categories.items())}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Ontology":
        if d.get("format_version") != FORMAT_VERSION:
            raise InvariantViolation("format_version", f"expected {FORMAT_VERSION}")
        cats = d.get("categories")
        if not isinstance(cats, Mapping):
            raise InvariantViolation("categories", "must be a map of category -> [labels]")
        for k, v in cats.items():
            if not isinstance(v, list) or not all(isinstance(s, str) and s for s in v):
                raise InvariantViolation(f"categories.{k}", "must be a list of non-empty strings")
        return cls({k: frozenset(v) for k, v in cats.items()})


def load_ontology(path=None) -> Ontology:
    """Load an ontology file; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("gesture_grounding").joinpath("data/ontology.json").read_text()
    else:
        text = Path(path).read_text()
    return Ontology.from_dict(_parse_json(text))


def default_ontology() -> Ontology:
    return load_ontology(None)


# --- semantic filter -------------------------------------------------------------

def semantic_filter(target: str, ontology: Ontology, objects: Iterable[ObjectEntry]) -> list[ObjectEntry]:
    """Objects whose label falls under ``target``, in input order."""
    return [o for o in objects if ontology.matches(target, o.label)]


class SemanticFilter(Protocol):
    def __call__(self, target: str, objects: Sequence[ObjectEntry]) -> list[ObjectEntry]: ...


@dataclass(frozen=True)
class OntologyFilter:
    ontology: Ontology

    def __call__(self, target: str, objects: Sequence[ObjectEntry]) -> list[ObjectEntry]:
        return semantic_filter(target, self.ontology, objects)


@dataclass(frozen=True)
class CompletionFilter:
    """Ask a completion backend which scene labels fall under ``target``.

    The reply must be a comma or newline separated list drawn from the
    scene's label vocabulary (or ``none``); anything else is rejected.
    """

    backend: object

    def prompt_text(self, target: str, vocabulary: Sequence[str]) -> str:
        return ("# Candidate object labels: " + ", ".join(vocabulary) + "\n"
                f"# List the labels that can be called '{target}', comma separated, or 'none'.\n"
                "# Labels:")

    def __call__(self, target: str, objects: Sequence[ObjectEntry]) -> list[ObjectEntry]:
        from .planner.backends import complete
        from .planner.prompt import Prompt

        vocab = sorted({o.label for o in objects})
        reply = complete(self.backend, Prompt.raw(self.prompt_text(target, vocab)))
        picked = {s.strip().strip("'\"") for s in reply.replace("\n", ",").split(",")}
        picked.discard("")
        if picked == {"none"}:
            return []
        outside = sorted(picked - set(vocab))
        if outside:
            raise SemanticFilterRejected(f"backend proposed labels outside the scene vocabulary: {outside}")
        return [o for o in objects if o.label in picked]


# --- scene specs and generation ------------------------------------------------

@dataclass(frozen=True)
class DrawerGrid:
    """Drawers on a vertical plane facing the camera; ``origin`` is the grid center.

    Row 1 is the top row (smallest y, since +y points down).
    """

    rows: int
    cols: int
    spacing: float
    origin: tuple[float, float, float] = (0.0, 0.0, 2.0)


@dataclass(frozen=True)
class ToolBench:
    labels: tuple[str, ...]
    positions: tuple[tuple[float, float, float], ...]
    table_margin: float = 0.15


@dataclass(frozen=True)
class RandomScene:
    n: int
    label_pool: tuple[str, ...]
    bounds: tuple[tuple[float, float], tuple[float, float], tuple[float, float]] = (
        (-0.5, 0.5), (0.1, 0.3), (0.8, 1.6))
    table: bool = True


SceneKind = Union[DrawerGrid, ToolBench, RandomScene]


@dataclass(frozen=True)
class SceneSpec:
    kind: SceneKind
    seed: int = 0
    camera: CameraIntrinsics = DEFAULT_CAMERA

    def to_dict(self) -> dict:
        k = self.kind
        if isinstance(k, DrawerGrid):
            body = {"type": "drawer_grid", "rows": k.rows, "cols": k.cols, "spacing": k.spacing,
                    "origin": list(k.origin)}
        elif isinstance(k, ToolBench):
            body = {"type": "tool_bench", "labels": list(k.labels), "positions": [list(p) for p in k.positions],
                    "table_margin": k.table_margin}
        else:
            body = {"type": "random", "n": k.n, "label_pool": list(k.label_pool),
                    "bounds": [list(b) for b in k.bounds], "table": k.table}
        return {"kind": body, "seed": self.seed, "camera": self.camera.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping, path: str = "scene") -> "SceneSpec":
        try:
            k = d["kind"]
            t = k["type"]
            if t == "drawer_grid":
                kind = DrawerGrid(int(k["rows"]), int(k["cols"]), float(k["spacing"]),
                                  tuple(float(v) for v in k.get("origin", (0.0, 0.0, 2.0))))
            elif t == "tool_bench":
                kind = ToolBench(tuple(k["labels"]), tuple(tuple(float(v) for v in p) for p in k["positions"]),
                                 float(k.get("table_margin", 0.15)))
            elif t == "random":
                kind = RandomScene(int(k["n"]), tuple(k["label_pool"]),
                                   tuple(tuple(float(v) for v in b) for b in k.get("bounds", RandomScene.bounds)),
                                   bool(k.get("table", True)))
            else:
                raise InvariantViolation(f"{path}.kind.type", f"unknown scene kind {t!r}")
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvariantViolation):
                raise
            raise InvariantViolation(f"{path}.kind", f"malformed scene spec: {e}") from None
        camera = CameraIntrinsics.from_dict(d["camera"]) if "camera" in d else DEFAULT_CAMERA
        return cls(kind, int(d.get("seed", 0)), camera)


def drawer_label(row: int, col: int) -> str:
    return f"drawer_{row}_{col}"


def _grid(u0: float, u1: float, v0: float, v1: float, step: float = CLOUD_GRID):
    # integer steps keep the samples exactly reproducible
    nu = int(np.floor((u1 - u0) / step + 1e-9)) + 1
    nv = int(np.floor((v1 - v0) / step + 1e-9)) + 1
    U, V = np.meshgrid(u0 + step * np.arange(nu), v0 + step * np.arange(nv), indexing="ij")
    return U.ravel(), V.ravel()


def _drawer_grid(k: DrawerGrid) -> tuple[list[ObjectEntry], np.ndarray]:
    if k.rows < 1 or k.cols < 1:
        raise InvalidSpec("drawer grid needs rows >= 1 and cols >= 1")
    if not k.spacing > 0:
        raise InvalidSpec("drawer spacing must be positive")
    ox, oy, oz = k.origin
    x0 = ox - 0.5 * (k.cols - 1) * k.spacing
    y0 = oy - 0.5 * (k.rows - 1) * k.spacing
    objs = [ObjectEntry(drawer_label(r + 1, c + 1), (x0 + c * k.spacing, y0 + r * k.spacing, oz))
            for r in range(k.rows) for c in range(k.cols)]
    half = 0.5 * k.spacing
    u, v = _grid(x0 - half, x0 + (k.cols - 1) * k.spacing + half, y0 - half, y0 + (k.rows - 1) * k.spacing + half)
    plane = np.column_stack([u, v, np.full_like(u, oz)])
    return objs, plane


def _table_plane(P: np.ndarray, margin: float, y: float) -> np.ndarray:
    lo, hi = P.min(axis=0) - margin, P.max(axis=0) + margin
    u, v = _grid(lo[0], hi[0], lo[2], hi[2])
    return np.column_stack([u, np.full_like(u, y), v])


def _tool_bench(k: ToolBench) -> tuple[list[ObjectEntry], np.ndarray]:
    if len(k.labels) != len(k.positions) or not k.labels:
        raise InvalidSpec("tool bench needs one position per label and at least one tool")
    try:
        objs = [ObjectEntry(lbl, p) for lbl, p in zip(k.labels, k.positions)]
    except ValueError as e:
        raise InvalidSpec(str(e)) from None
    P = np.stack([o.position for o in objs])
    # table surface a few centimeters below the lowest object center (+y is down)
    return objs, _table_plane(P, k.table_margin, float(P[:, 1].max()) + 0.03)


def _random_scene(k: RandomScene, rng: np.random.Generator) -> tuple[list[ObjectEntry], np.ndarray]:
    if k.n < 1 or not k.label_pool:
        raise InvalidSpec("random scene needs n >= 1 and a non-empty label pool")
    (x0, x1), (y0, y1), (z0, z1) = k.bounds
    if not (x0 <= x1 and y0 <= y1 and z0 <= z1):
        raise InvalidSpec("random scene bounds must be (low, high) pairs")
    labels = [k.label_pool[int(i)] for i in rng.integers(0, len(k.label_pool), size=k.n)]
    P = rng.uniform([x0, y0, z0], [x1, y1, z1], size=(k.n, 3))
    objs = [ObjectEntry(lbl, p) for lbl, p in zip(labels, P)]
    if not k.table:
        return objs, np.empty((0, 3))
    return objs, _table_plane(P, 0.05, y1 + 0.03)


def generate_scene(spec: SceneSpec) -> Scene:
    rng = np.random.default_rng(spec.seed)
    k = spec.kind
    if isinstance(k, DrawerGrid):
        objs, extra = _drawer_grid(k)
    elif isinstance(k, ToolBench):
        objs, extra = _tool_bench(k)
    elif isinstance(k, RandomScene):
        objs, extra = _random_scene(k, rng)
    else:
        raise InvalidSpec(f"unknown scene kind {type(k).__name__}")
    centers = np.stack([o.position for o in objs])
    return Scene(tuple(objs), np.concatenate([centers, extra]), spec.camera, "camera")


# --- files -----------------------------------------------------------------

def _parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene.to_dict(), sort_keys=True) + "\n"


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene))


def _point_at(v, path: str) -> np.ndarray:
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise InvariantViolation(path, "must be three numbers") from None
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvariantViolation(path, "must be three finite numbers")
    return arr


def scene_from_dict(d, require_objects: bool = True) -> Scene:
    if not isinstance(d, Mapping):
        raise InvariantViolation("$", "scene file must hold an object")
    if d.get("format_version") != FORMAT_VERSION:
        raise InvariantViolation("format_version", f"expected {FORMAT_VERSION}, got {d.get('format_version')!r}")
    try:
        camera = CameraIntrinsics.from_dict(d["camera"])
    except KeyError as e:
        raise InvariantViolation(f"camera.{e.args[0]}" if "camera" in d else "camera", "missing") from None
    except (TypeError, ValueError) as e:
        raise InvariantViolation("camera", str(e)) from None
    objs = d.get("objects")
    if not isinstance(objs, list):
        raise InvariantViolation("objects", "must be a list")
    if require_objects and not objs:
        raise InvariantViolation("objects", "a task scene needs at least one object")
    entries = []
    for i, o in enumerate(objs):
        label = o.get("label") if isinstance(o, Mapping) else None
        if not isinstance(label, str) or not label.strip():
            raise InvariantViolation(f"objects[{i}].label", "must be a non-empty string")
        entries.append(ObjectEntry(label, _point_at(o.get("pos"), f"objects[{i}].pos")))
    raw_cloud = d.get("cloud", [])
    if not isinstance(raw_cloud, list):
        raise InvariantViolation("cloud", "must be a list of points")
    cloud = np.stack([_point_at(p, f"cloud[{j}]") for j, p in enumerate(raw_cloud)]) if raw_cloud else np.empty((0, 3))
    missing = _missing_from_cloud(entries, cloud)
    if missing:
        raise InvariantViolation(f"objects[{missing[0]}].pos", "object center is not a member of the cloud")
    return Scene(tuple(entries), cloud, camera, str(d.get("frame_tag", "camera")))


def loads_scene(text: str) -> Scene:
    return scene_from_dict(_parse_json(text))


def load_scene(path) -> Scene:
    return loads_scene(Path(path).read_text())
