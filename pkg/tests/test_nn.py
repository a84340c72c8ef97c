from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesture_grounding.errors import EmptySequence, ShapeMismatch
from gesture_grounding.gesture.classifier import mlp_forward, rnn_forward
from gesture_grounding.gesture.nn import MlpModel, RecurrentModel, gradient_check, sgd_train
from gesture_grounding.gesture.synth import synth_gesture
from gesture_grounding.gesture.keypoints import DYNAMIC_CLASSES, GestureClass
from gesture_grounding.gesture.features import extract_features_many
from gesture_grounding.geometry import DEFAULT_CAMERA
from oracles import hand_mlp_probs


def _naive_fd(model, X, y, eps=1e-5):
    """Central differences by mutating one parameter entry at a time."""
    out = []
    for p in model.parameters():
        g = np.zeros(p.size)
        flat = p.reshape(-1)
        for j in range(p.size):
            old = flat[j]
            flat[j] = old + eps
            lp = model.loss(X, y)
            flat[j] = old - eps
            lm = model.loss(X, y)
            flat[j] = old
            g[j] = (lp - lm) / (2 * eps)
        out.append(g)
    return np.concatenate(out)


class _Linear:
    """loss(w) = w * c: one parameter, exact derivative c."""

    def __init__(self, w, c):
        self.w = np.array([w], dtype=float)
        self.c = c

    def parameters(self):
        return [self.w]

    def loss(self, X, y):
        return float(self.w[0] * self.c)

    def loss_and_grads(self, X, y):
        return self.loss(X, y), [np.array([self.c])]


class TestForward:
    def test_zero_mlp_is_uniform(self):
        p = mlp_forward(MlpModel.zeros(), np.random.default_rng(0).normal(size=106))
        np.testing.assert_allclose(p, np.full(8, 1 / 8), atol=1e-15)

    def test_zero_rnn_is_uniform(self):
        p = rnn_forward(RecurrentModel.zeros(), np.random.default_rng(0).normal(size=(5, 106)))
        np.testing.assert_allclose(p, np.full(7, 1 / 7), atol=1e-15)

    @given(st.integers(0, 2**31))
    def test_softmax_sums_to_one(self, seed):
        rng = np.random.default_rng(seed)
        m = MlpModel.init((106, 16, 8, 8), rng)
        p = m.forward(rng.normal(size=106) * 10)
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9
        r = RecurrentModel.init(106, 8, 7, rng)
        q = r.forward(rng.normal(size=(4, 106)) * 10)
        assert np.all(q >= 0) and abs(q.sum() - 1) <= 1e-9

    def test_tiny_mlp_matches_hand_forward(self):
        W1 = [[0.5, -1.0], [2.0, 0.25]]
        b1 = [0.1, -0.2]
        W2 = [[1.0, -0.5], [-1.5, 0.75]]
        b2 = [0.0, 0.3]
        W3 = [[0.2, -0.4], [1.1, 0.6]]
        b3 = [0.05, -0.05]
        m = MlpModel([np.array(W1), np.array(W2), np.array(W3)], [np.array(b1), np.array(b2), np.array(b3)])
        for x in ([0.3, -0.7], [1.0, 1.0], [-2.0, 0.5]):
            np.testing.assert_allclose(m.forward(np.array(x)), hand_mlp_probs(W1, b1, W2, b2, W3, b3, x),
                                       rtol=0, atol=1e-15)

    def test_rnn_single_frame_is_one_cell_step(self):
        rng = np.random.default_rng(4)
        r = RecurrentModel.init(6, 3, 4, rng)
        x = rng.normal(size=6)
        H = 3
        a = x @ r.Wx + r.b
        sig = lambda v: 1 / (1 + np.exp(-v))  # noqa: E731
        c = sig(a[:H]) * np.tanh(a[2 * H:3 * H])
        h = sig(a[3 * H:]) * np.tanh(c)
        z = h @ r.Wo + r.bo
        expected = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
        np.testing.assert_allclose(r.forward(x[None, :]), expected, atol=1e-15)

    def test_trained_rnn_is_order_sensitive(self, models):
        frames = synth_gesture(GestureClass.HAMMERING, 0.0, seed=3)
        X = extract_features_many(frames, DEFAULT_CAMERA)
        fwd = models.dynamic.forward(X)
        rev = models.dynamic.forward(X[::-1])
        assert not np.allclose(fwd, rev)
        assert DYNAMIC_CLASSES[int(np.argmax(fwd))] is GestureClass.HAMMERING

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatch):
            mlp_forward(MlpModel.zeros(), np.zeros(5))
        with pytest.raises(EmptySequence):
            rnn_forward(RecurrentModel.zeros(), np.zeros((0, 106)))


class TestGradients:
    def test_linear_model_exact(self):
        assert gradient_check(_Linear(0.7, 2.5), (None, None)) < 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_mlp_against_naive_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = MlpModel.init((7, 5, 4, 3), rng)
        X, y = rng.normal(size=(3, 7)), rng.integers(0, 3, 3)
        _, grads = m.loss_and_grads(X, y)
        analytic = np.concatenate([g.ravel() for g in grads])
        np.testing.assert_allclose(analytic, _naive_fd(m, X, y), rtol=1e-5, atol=1e-8)
        assert gradient_check(m, (X, y)) <= 1e-4

    @pytest.mark.parametrize("seed", range(5))
    def test_rnn_against_naive_differences(self, seed):
        rng = np.random.default_rng(seed)
        r = RecurrentModel.init(5, 3, 4, rng)
        X, y = rng.normal(size=(2, 8, 5)), rng.integers(0, 4, 2)
        _, grads = r.loss_and_grads(X, y)
        analytic = np.concatenate([g.ravel() for g in grads])
        np.testing.assert_allclose(analytic, _naive_fd(r, X, y), rtol=1e-5, atol=1e-8)
        assert gradient_check(r, (X, y)) <= 1e-4

    def test_full_size_models(self):
        rng = np.random.default_rng(0)
        m = MlpModel.init((106, 64, 32, 8), rng)
        assert gradient_check(m, (rng.normal(size=(4, 106)), rng.integers(0, 8, 4))) <= 1e-4
        r = RecurrentModel.init(106, 64, 7, rng)
        assert gradient_check(r, (rng.normal(size=(1, 8, 106)), rng.integers(0, 7, 1))) <= 1e-4

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            gradient_check(_Linear(1, 1), (None, None), epsilon=1e-2)

    def test_detects_a_wrong_gradient(self):
        class Broken(_Linear):
            def loss_and_grads(self, X, y):
                return self.loss(X, y), [np.array([self.c * 1.01])]

        assert gradient_check(Broken(0.7, 2.5), (None, None)) > 1e-3


class TestTraining:
    def test_memorises_one_sample(self):
        rng = np.random.default_rng(0)
        m = MlpModel.init((106, 64, 32, 8), rng)
        X, y = rng.normal(size=(1, 106)), np.array([5])
        sgd_train(m, X, y, learning_rate=0.05, epochs=200, batch_size=1, rng=rng)
        assert int(np.argmax(m.forward(X[0]))) == 5

    def test_seeded_training_bit_identical(self):
        def run():
            rng = np.random.default_rng(7)
            m = MlpModel.init((10, 6, 4, 3), rng)
            X, y = rng.normal(size=(40, 10)), rng.integers(0, 3, 40)
            curve = sgd_train(m, X, y, learning_rate=0.05, epochs=20, batch_size=8, rng=rng)
            return m, curve

        (a, ca), (b, cb) = run(), run()
        assert ca == cb and ca[-1] < ca[0]
        for p, q in zip(a.parameters(), b.parameters()):
            assert np.array_equal(p, q)

    def test_rnn_loss_decreases(self):
        rng = np.random.default_rng(1)
        r = RecurrentModel.init(4, 6, 2, rng)
        X = rng.normal(size=(30, 6, 4))
        y = (X[:, -1, 0] > 0).astype(int)
        curve = sgd_train(r, X, y, learning_rate=0.1, epochs=30, batch_size=5, rng=rng)
        assert curve[-1] < curve[0]
        assert math.isfinite(curve[-1])
