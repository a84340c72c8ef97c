"""Training, persistence and runtime routing of the static/dynamic classifiers."""
from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyDataset, EmptySequence, ShapeMismatch
from ..geometry import DEFAULT_CAMERA, CameraIntrinsics
from .dataset import MIN_DYNAMIC_FRAMES, GestureDataset, stack_sequences
from .features import N_FEATURES, extract_features, extract_features_many
from .keypoints import DYNAMIC_CLASSES, STATIC_CLASSES, GestureClass, GestureObservation, HandKeypoints
from .nn import MlpModel, RecurrentModel, sgd_train

DYNAMIC_WINDOW = 16
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    hidden: tuple[int, ...] = (64, 32)
    recurrent_hidden: int = 64

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


def mlp_forward(model: MlpModel, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ShapeMismatch(f"expected one feature vector, got shape {f.shape}")
    return model.forward(f)


def rnn_forward(model: RecurrentModel, frames) -> np.ndarray:
    X = np.asarray(frames, dtype=float)
    if X.size == 0:
        raise EmptySequence("sequence has no frames")
    if X.ndim != 2:
        raise ShapeMismatch(f"expected (T, D) feature frames, got shape {X.shape}")
    return model.forward(X)


def _labels(samples, classes: Sequence[GestureClass]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([index[s.label] for s in samples], dtype=int)
    except KeyError as e:
        raise ValueError(f"label {e.args[0].value!r} is outside the model's classes") from None


def mlp_train(data: GestureDataset, hyper: TrainConfig = TrainConfig()) -> tuple[MlpModel, list[float]]:
    """Fit the static classifier on every training-split sample (last frame of each)."""
    samples = data.train.samples
    if not samples:
        raise EmptyDataset("no training samples")
    X = extract_features_many([s.frames[-1] for s in samples], data.camera)
    y = _labels(samples, STATIC_CLASSES)
    rng = np.random.default_rng(hyper.seed)
    model = MlpModel.init((N_FEATURES, *hyper.hidden, len(STATIC_CLASSES)), rng)
    curve = sgd_train(model, X, y, learning_rate=hyper.learning_rate, epochs=hyper.epochs,
                      batch_size=hyper.batch_size, rng=rng)
    return model, curve


def rnn_train(data: GestureDataset, hyper: TrainConfig = TrainConfig(),
              window: int = DYNAMIC_WINDOW) -> tuple[RecurrentModel, list[float]]:
    """Fit the dynamic classifier on the last ``window`` frames of each training sequence."""
    samples = data.train.samples
    if not samples:
        raise EmptyDataset("no training samples")
    window = min(window, min(len(s.frames) for s in samples))
    X = stack_sequences(samples, data.camera, window)
    y = _labels(samples, DYNAMIC_CLASSES)
    rng = np.random.default_rng(hyper.seed)
    model = RecurrentModel.init(N_FEATURES, hyper.recurrent_hidden, len(DYNAMIC_CLASSES), rng)
    curve = sgd_train(model, X, y, learning_rate=hyper.learning_rate, epochs=hyper.epochs,
                      batch_size=hyper.batch_size, rng=rng)
    return model, curve


@dataclass(frozen=True)
class GestureModels:
    """A trained static/dynamic pair plus the camera their features assume.

    Either model may be absent; ``classify`` then routes to the other one.
    """

    static: MlpModel | None = None
    dynamic: RecurrentModel | None = None
    camera: CameraIntrinsics = field(default=DEFAULT_CAMERA)

    def save(self, path) -> None:
        arrays = {}
        meta = {"format_version": 1, "camera": self.camera.to_dict(), "static_layers": 0, "dynamic": False}
        if self.static is not None:
            meta["static_layers"] = len(self.static.weights)
            for li, (W, b) in enumerate(zip(self.static.weights, self.static.biases)):
                arrays[f"static_W{li}"] = W
                arrays[f"static_b{li}"] = b
        if self.dynamic is not None:
            meta["dynamic"] = True
            for name, p in zip(("Wx", "Wh", "b", "Wo", "bo"), self.dynamic.parameters()):
                arrays[f"dynamic_{name}"] = p
        arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
        buf = io.BytesIO()
        np.savez(buf, **arrays)
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path) -> "GestureModels":
        with np.load(path) as z:
            meta = json.loads(bytes(z["meta"]).decode())
            static = None
            if meta["static_layers"]:
                n = meta["static_layers"]
                static = MlpModel([z[f"static_W{i}"] for i in range(n)], [z[f"static_b{i}"] for i in range(n)])
            dynamic = None
            if meta["dynamic"]:
                dynamic = RecurrentModel(*(z[f"dynamic_{k}"] for k in ("Wx", "Wh", "b", "Wo", "bo")))
        return cls(static, dynamic, CameraIntrinsics.from_dict(meta["camera"]))


def _best(probs: np.ndarray, classes) -> tuple[GestureClass, float]:
    j = int(np.argmax(probs))
    return classes[j], float(probs[j])


def classify(models: GestureModels, frames: Sequence[HandKeypoints],
             threshold: float = DEFAULT_THRESHOLD) -> GestureObservation:
    """Route a frame buffer to the static and/or dynamic classifier.

    Fewer than 8 frames: static model on the last frame. Otherwise both run
    (dynamic on the last 16 frames) and the more confident answer wins.
    A winning probability below ``threshold`` yields Unknown.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("classify needs at least one frame")
    cam = models.camera
    candidates: list[tuple[GestureClass, float]] = []
    if models.static is not None:
        candidates.append(_best(models.static.forward(extract_features(frames[-1], cam)), STATIC_CLASSES))
    if models.dynamic is not None and len(frames) >= MIN_DYNAMIC_FRAMES:
        X = extract_features_many(frames[-DYNAMIC_WINDOW:], cam)
        candidates.append(_best(models.dynamic.forward(X), DYNAMIC_CLASSES))
    if candidates:
        # max keeps the first of equal confidences, so static wins ties
        cls, conf = max(candidates, key=lambda c: c[1])
    else:
        cls, conf = GestureClass.UNKNOWN, 0.0
    if conf < threshold:
        cls = GestureClass.UNKNOWN
    median = frames[(len(frames) - 1) // 2]
    return GestureObservation(cls, conf, tuple(frames), median.timestamp)


def evaluate(models: GestureModels, data: GestureDataset, threshold: float = 0.0) -> dict:
    """Accuracy and confusion counts of :func:`classify` on ``data``."""
    data.require_nonempty()
    correct = 0
    confusion: dict[str, dict[str, int]] = {}
    for s in data.samples:
        got = classify(models, s.frames, threshold).gesture_class
        correct += got is s.label
        row = confusion.setdefault(s.label.value, {})
        row[got.value] = row.get(got.value, 0) + 1
    return {"n": len(data), "accuracy": correct / len(data), "confusion": confusion}


def config_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    d["hidden"] = list(cfg.hidden)
    return d
