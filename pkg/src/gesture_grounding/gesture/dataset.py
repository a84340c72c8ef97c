"""Synthetic gesture datasets and their line-delimited JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptyDataset, InvariantViolation, ParseError
from ..geometry import DEFAULT_CAMERA, CameraIntrinsics
from .keypoints import DYNAMIC_CLASSES, STATIC_CLASSES, GestureClass, HandKeypoints
from .synth import synth_gesture

FORMAT_VERSION = 1
MIN_DYNAMIC_FRAMES = 8


@dataclass(frozen=True)
class GestureSample:
    frames: tuple[HandKeypoints, ...]
    label: GestureClass
    split: str = "train"

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        label = GestureClass(self.label)
        object.__setattr__(self, "label", label)
        if label is GestureClass.UNKNOWN:
            raise ValueError("dataset labels are never Unknown")
        if not self.frames:
            raise ValueError("a sample needs at least one frame")
        if label.is_dynamic and len(self.frames) < MIN_DYNAMIC_FRAMES:
            raise ValueError(f"dynamic samples need >= {MIN_DYNAMIC_FRAMES} frames")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")


@dataclass(frozen=True)
class GestureDataset:
    samples: tuple[GestureSample, ...]
    seed: int | None = None
    camera: CameraIntrinsics = field(default=DEFAULT_CAMERA)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def split(self, tag: str) -> "GestureDataset":
        return GestureDataset(tuple(s for s in self.samples if s.split == tag), self.seed, self.camera)

    @property
    def train(self) -> "GestureDataset":
        return self.split("train")

    @property
    def test(self) -> "GestureDataset":
        return self.split("test")

    def require_nonempty(self) -> None:
        if not self.samples:
            raise EmptyDataset("dataset has no samples")


def generate_dataset(
    classes: Iterable[GestureClass],
    n_per_class: int,
    *,
    noise_sigma: float = 0.003,
    seed: int = 0,
    test_fraction: float = 0.2,
    n_frames: int | None = None,
    camera: CameraIntrinsics = DEFAULT_CAMERA,
) -> GestureDataset:
    """Draw ``n_per_class`` synthetic samples per class with a seeded train/test split."""
    classes = [GestureClass(c) for c in classes]
    rng = np.random.default_rng(seed)
    samples = []
    for cls in classes:
        seeds = rng.integers(0, 2**63 - 1, size=n_per_class)
        n_test = int(round(test_fraction * n_per_class))
        is_test = np.zeros(n_per_class, dtype=bool)
        is_test[rng.permutation(n_per_class)[:n_test]] = True
        for s, test in zip(seeds, is_test):
            frames = synth_gesture(cls, noise_sigma, n_frames, int(s), camera=camera)
            samples.append(GestureSample(tuple(frames), cls, "test" if test else "train"))
    return GestureDataset(tuple(samples), seed, camera)


def static_dataset(n_per_class: int = 500, **kw) -> GestureDataset:
    return generate_dataset(STATIC_CLASSES, n_per_class, **kw)


def dynamic_dataset(n_per_class: int = 200, **kw) -> GestureDataset:
    return generate_dataset(DYNAMIC_CLASSES, n_per_class, **kw)


# --- file format -----------------------------------------------------------
# First line is a header record; every following line is one sample.

def _sample_record(s: GestureSample) -> dict:
    return {"label": s.label.value, "split": s.split, "frames": [f.to_dict() for f in s.frames]}


def dumps_dataset(data: GestureDataset) -> str:
    header = {"format_version": FORMAT_VERSION, "kind": "gesture_dataset", "seed": data.seed,
              "camera": data.camera.to_dict()}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(_sample_record(s), sort_keys=True) for s in data.samples]
    return "\n".join(lines) + "\n"


def save_dataset(data: GestureDataset, path) -> None:
    Path(path).write_text(dumps_dataset(data))


def loads_dataset(text: str) -> GestureDataset:
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise ParseError("empty dataset file", 1, 1)
    records = []
    for n, ln in lines:
        try:
            records.append((n, json.loads(ln)))
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, n, e.colno) from None
    _, header = records[0]
    if header.get("format_version") != FORMAT_VERSION:
        raise InvariantViolation("format_version", f"expected {FORMAT_VERSION}")
    camera = CameraIntrinsics.from_dict(header["camera"]) if "camera" in header else DEFAULT_CAMERA
    samples = []
    for i, (n, rec) in enumerate(records[1:]):
        try:
            frames = tuple(HandKeypoints.from_dict(f) for f in rec["frames"])
            samples.append(GestureSample(frames, GestureClass(rec["label"]), rec.get("split", "train")))
        except (KeyError, ValueError, TypeError) as e:
            raise InvariantViolation(f"samples[{i}]", f"line {n}: {e}") from None
    return GestureDataset(tuple(samples), header.get("seed"), camera)


def load_dataset(path) -> GestureDataset:
    return loads_dataset(Path(path).read_text())


def stack_sequences(samples: Sequence[GestureSample], camera: CameraIntrinsics, window: int) -> np.ndarray:
    """Features of the last ``window`` frames of each sample, shape (n, T, 106).

    All samples must provide at least ``window`` frames or share one length.
    """
    from .features import extract_features_many

    seqs = [extract_features_many(s.frames[-window:], camera) for s in samples]
    lengths = {len(x) for x in seqs}
    if len(lengths) != 1:
        raise ValueError(f"sequences of unequal length {sorted(lengths)} cannot be stacked")
    return np.stack(seqs)
