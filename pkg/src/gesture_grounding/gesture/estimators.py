"""scikit-learn compatible wrappers around the featurizer and classifiers.

They compose with ``Pipeline``, ``clone`` and ``GridSearchCV``; the
underlying numerics are the hand-written models in :mod:`.nn`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..geometry import DEFAULT_CAMERA, CameraIntrinsics
from .features import N_FEATURES, extract_features_many
from .keypoints import DYNAMIC_CLASSES, STATIC_CLASSES, HandKeypoints
from .nn import MlpModel, RecurrentModel, sgd_train


class HandFeaturizer(TransformerMixin, BaseEstimator):
    """Map a sequence of :class:`HandKeypoints` to an ``(n, 106)`` feature matrix."""

    def __init__(self, camera: CameraIntrinsics | None = None):
        self.camera = camera

    def fit(self, X, y=None):
        self._validate(X)
        self.n_features_out_ = N_FEATURES
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_out_")
        return extract_features_many(self._validate(X), self.camera or DEFAULT_CAMERA)

    @staticmethod
    def _validate(X) -> list[HandKeypoints]:
        hands = list(X)
        if not hands:
            raise ValueError("HandFeaturizer needs at least one hand")
        bad = [i for i, h in enumerate(hands) if not isinstance(h, HandKeypoints)]
        if bad:
            raise TypeError(f"entries {bad[:5]} are not HandKeypoints")
        return hands


class _SgdClassifier(ClassifierMixin, BaseEstimator):
    _default_classes: tuple = ()

    def _resolve_classes(self, y) -> np.ndarray:
        if self.classes is not None:
            classes = np.asarray([getattr(c, "value", c) for c in self.classes])
        else:
            classes = np.asarray([c.value for c in self._default_classes])
        labels = np.asarray([getattr(v, "value", v) for v in y])
        unknown = sorted(set(labels.tolist()) - set(classes.tolist()))
        if unknown:
            raise ValueError(f"labels {unknown} not in classes")
        return classes

    def _encode(self, y) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.classes_.tolist())}
        return np.array([index[getattr(v, "value", v)] for v in y], dtype=int)

    def _fit(self, model, X, y, rng):
        self.loss_curve_ = sgd_train(model, X, self._encode(y), learning_rate=self.learning_rate,
                                     epochs=self.epochs, batch_size=self.batch_size, rng=rng)
        self.model_ = model
        return self

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class StaticGestureClassifier(_SgdClassifier):
    """ReLU MLP over single-frame features; ``classes`` defaults to the 8 static gestures."""

    _default_classes = STATIC_CLASSES

    def __init__(self, hidden: Sequence[int] = (64, 32), learning_rate: float = 1e-2, epochs: int = 200,
                 batch_size: int = 32, random_state: int = 0, classes=None):
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.classes = classes

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        if len(X) != len(y):
            raise ValueError("X and y have different lengths")
        self.classes_ = self._resolve_classes(y)
        self.n_features_in_ = X.shape[1]
        rng = np.random.default_rng(self.random_state)
        model = MlpModel.init((X.shape[1], *self.hidden, len(self.classes_)), rng)
        return self._fit(model, X, y, rng)

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.model_.forward(X)


class DynamicGestureClassifier(_SgdClassifier):
    """LSTM over ``(n, T, 106)`` feature sequences; ``classes`` defaults to the 7 dynamic gestures."""

    _default_classes = DYNAMIC_CLASSES

    def __init__(self, hidden: int = 64, learning_rate: float = 1e-2, epochs: int = 200,
                 batch_size: int = 32, random_state: int = 0, classes=None):
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.classes = classes

    def fit(self, X, y):
        X = check_array(X, dtype=float, allow_nd=True)
        if X.ndim != 3:
            raise ValueError(f"expected (n, T, D) sequences, got shape {X.shape}")
        if len(X) != len(y):
            raise ValueError("X and y have different lengths")
        self.classes_ = self._resolve_classes(y)
        self.n_features_in_ = X.shape[2]
        rng = np.random.default_rng(self.random_state)
        model = RecurrentModel.init(X.shape[2], self.hidden, len(self.classes_), rng)
        return self._fit(model, X, y, rng)

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float, allow_nd=True)
        if X.ndim != 3 or X.shape[2] != self.n_features_in_:
            raise ValueError(f"expected (n, T, {self.n_features_in_}) sequences, got {X.shape}")
        return self.model_.forward(X)
