"""Static (MLP) and dynamic (LSTM) classifiers written directly in numpy.

Both models expose the same small surface used by training and by
:func:`gradient_check`:

- ``parameters()`` returns the live parameter arrays (mutating them mutates
  the model),
- ``loss_and_grads(X, y)`` returns the mean cross-entropy and its gradient
  for every parameter, in ``parameters()`` order,
- ``perturbed_losses(X, y, pert, n_rows, dtype)`` evaluates the loss under many
  single-entry parameter perturbations at once, which keeps finite
  difference checks over tens of thousands of parameters affordable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import EmptySequence, ShapeMismatch


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_rows(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    zmax = logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(logits - zmax).sum(axis=-1)) + zmax[:, 0]
    return lse - logits[np.arange(len(y)), y]


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Perturbation(NamedTuple):
    """Row ``rows[j]`` sees parameter ``pid[j]`` entry (``i[j]``, ``k[j]``) shifted by ``delta[j]``."""

    rows: np.ndarray
    pid: np.ndarray
    i: np.ndarray
    k: np.ndarray
    delta: np.ndarray


def _affine(inp, W, b, wid, bid, pert: Perturbation | None):
    out = inp @ W
    if b is not None:
        out = out + b
    if pert is not None:
        m = pert.pid == wid
        if m.any():
            r = pert.rows[m]
            out[r, pert.k[m]] += pert.delta[m] * inp[r, pert.i[m]]
        if bid is not None:
            m = pert.pid == bid
            if m.any():
                out[pert.rows[m], pert.k[m]] += pert.delta[m]
    return out


def _as_2d_samples(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ShapeMismatch(f"expected (n, {n_features}) features, got {X.shape}")
    return X


@dataclass
class MlpModel:
    """Fully connected ReLU network with a softmax output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init(cls, sizes=(106, 64, 32, 8), rng: np.random.Generator | None = None) -> "MlpModel":
        rng = np.random.default_rng(0) if rng is None else rng
        ws = [rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        return cls(ws, [np.zeros(b) for b in sizes[1:]])

    @classmethod
    def zeros(cls, sizes=(106, 64, 32, 8)) -> "MlpModel":
        return cls([np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])], [np.zeros(b) for b in sizes[1:]])

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def _logits(self, X, pert=None):
        h = X
        last = len(self.weights) - 1
        for li, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = _affine(h, W.astype(X.dtype, copy=False), b.astype(X.dtype, copy=False), 2 * li, 2 * li + 1, pert)
            h = z if li == last else np.maximum(z, 0.0)
        return h

    def forward(self, X) -> np.ndarray:
        """Class probabilities for one feature vector or a batch."""
        single = np.asarray(X).ndim == 1
        X = _as_2d_samples(X, self.n_inputs)
        p = softmax(self._logits(X))
        return p[0] if single else p

    def loss(self, X, y) -> float:
        X = _as_2d_samples(X, self.n_inputs)
        return float(cross_entropy_rows(self._logits(X), np.atleast_1d(y)).mean())

    def loss_and_grads(self, X, y):
        X = _as_2d_samples(X, self.n_inputs)
        y = np.atleast_1d(np.asarray(y, dtype=int))
        n = len(X)
        acts = [X]
        pre = []
        h = X
        for li, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = z if li == len(self.weights) - 1 else np.maximum(z, 0.0)
            acts.append(h)
        p = softmax(h)
        loss = float(cross_entropy_rows(h, y).mean())
        d = p.copy()
        d[np.arange(n), y] -= 1.0
        d /= n
        grads_w, grads_b = [], []
        for li in range(len(self.weights) - 1, -1, -1):
            grads_w.append(acts[li].T @ d)
            grads_b.append(d.sum(axis=0))
            if li > 0:
                d = (d @ self.weights[li].T) * (pre[li - 1] > 0)
        grads_w.reverse()
        grads_b.reverse()
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads += [gw, gb]
        return loss, grads

    def perturbed_losses(self, X, y, pert: Perturbation, n_rows: int, dtype=np.float64) -> np.ndarray:
        X = _as_2d_samples(X, self.n_inputs)
        m = len(X)
        rows_X = np.tile(X, (n_rows // m, 1)).astype(dtype)
        logits = self._logits(rows_X, pert)
        return cross_entropy_rows(logits, np.tile(np.atleast_1d(y), n_rows // m)).reshape(-1, m).mean(axis=1)


@dataclass
class RecurrentModel:
    """Single LSTM cell (gates ordered input, forget, cell, output) plus a linear readout."""

    Wx: np.ndarray
    Wh: np.ndarray
    b: np.ndarray
    Wo: np.ndarray
    bo: np.ndarray

    @classmethod
    def init(cls, n_inputs=106, n_hidden=64, n_classes=7, rng: np.random.Generator | None = None) -> "RecurrentModel":
        rng = np.random.default_rng(0) if rng is None else rng
        s = 1.0 / np.sqrt(n_hidden)
        b = np.zeros(4 * n_hidden)
        b[n_hidden:2 * n_hidden] = 1.0
        return cls(
            rng.uniform(-s, s, size=(n_inputs, 4 * n_hidden)),
            rng.uniform(-s, s, size=(n_hidden, 4 * n_hidden)),
            b,
            rng.normal(0.0, np.sqrt(1.0 / n_hidden), size=(n_hidden, n_classes)),
            np.zeros(n_classes),
        )

    @classmethod
    def zeros(cls, n_inputs=106, n_hidden=64, n_classes=7) -> "RecurrentModel":
        return cls(np.zeros((n_inputs, 4 * n_hidden)), np.zeros((n_hidden, 4 * n_hidden)),
                   np.zeros(4 * n_hidden), np.zeros((n_hidden, n_classes)), np.zeros(n_classes))

    @property
    def n_inputs(self) -> int:
        return self.Wx.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.Wh.shape[0]

    @property
    def n_classes(self) -> int:
        return self.Wo.shape[1]

    def parameters(self) -> list[np.ndarray]:
        return [self.Wx, self.Wh, self.b, self.Wo, self.bo]

    def copy(self) -> "RecurrentModel":
        return RecurrentModel(*(p.copy() for p in self.parameters()))

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[2] != self.n_inputs:
            raise ShapeMismatch(f"expected (n, T, {self.n_inputs}) sequences, got {X.shape}")
        if X.shape[1] == 0:
            raise EmptySequence("sequence has no frames")
        return X

    def _run(self, X, cache=None):
        n, T, _ = X.shape
        H = self.n_hidden
        xa = X @ self.Wx + self.b  # input projections for every step at once
        h = np.zeros((n, H))
        c = np.zeros((n, H))
        for t in range(T):
            a = xa[:, t] + h @ self.Wh
            i = sigmoid(a[:, :H])
            f = sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = sigmoid(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            if cache is not None:
                cache.append((h_prev, c_prev, i, f, g, o, tc))
        return h @ self.Wo + self.bo, h

    def forward(self, X) -> np.ndarray:
        """Class probabilities for one ``(T, D)`` sequence or a ``(n, T, D)`` batch."""
        single = np.asarray(X).ndim == 2
        X = self._check(X)
        p = softmax(self._run(X)[0])
        return p[0] if single else p

    def loss(self, X, y) -> float:
        X = self._check(X)
        return float(cross_entropy_rows(self._run(X)[0], np.atleast_1d(y)).mean())

    def loss_and_grads(self, X, y):
        X = self._check(X)
        y = np.atleast_1d(np.asarray(y, dtype=int))
        n = len(X)
        H = self.n_hidden
        cache: list = []
        logits, h_last = self._run(X, cache=cache)
        loss = float(cross_entropy_rows(logits, y).mean())
        d = softmax(logits)
        d[np.arange(n), y] -= 1.0
        d /= n
        dWo = h_last.T @ d
        dbo = d.sum(axis=0)
        dh = d @ self.Wo.T
        dc = np.zeros((n, H))
        dWh = np.zeros_like(self.Wh)
        dA = np.empty((n, len(cache), 4 * H))
        for t in reversed(range(len(cache))):
            h_prev, c_prev, i, f, g, o, tc = cache[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            da = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)
            dA[:, t] = da
            dWh += h_prev.T @ da
            dh = da @ self.Wh.T
            dc = dc * f
        flat = dA.reshape(-1, 4 * H)
        dWx = X.reshape(-1, X.shape[2]).T @ flat
        db = flat.sum(axis=0)
        return loss, [dWx, dWh, db, dWo, dbo]

    def perturbed_losses(self, X, y, pert: Perturbation, n_rows: int, dtype=np.float64) -> np.ndarray:
        X = self._check(X).astype(dtype)
        m, T, _ = X.shape
        reps = n_rows // m
        H = self.n_hidden
        Wx, Wh, b, Wo, bo = (p.astype(dtype, copy=False) for p in self.parameters())
        h = np.zeros((n_rows, H), dtype=dtype)
        c = np.zeros((n_rows, H), dtype=dtype)
        sample = pert.rows % m
        on_wx, on_wh, on_b = pert.pid == 0, pert.pid == 1, pert.pid == 2
        a = np.empty((n_rows, 4 * H), dtype=dtype)
        for t in range(T):
            # the input projection is shared by every perturbed copy of a sample
            np.matmul(h, Wh, out=a)
            a += np.tile(X[:, t] @ Wx + b, (reps, 1))
            r = pert.rows[on_wx]
            a[r, pert.k[on_wx]] += pert.delta[on_wx] * X[sample[on_wx], t, pert.i[on_wx]]
            r = pert.rows[on_wh]
            a[r, pert.k[on_wh]] += pert.delta[on_wh] * h[r, pert.i[on_wh]]
            a[pert.rows[on_b], pert.k[on_b]] += pert.delta[on_b]
            sig = sigmoid(a[:, :2 * H])
            o = sigmoid(a[:, 3 * H:])
            c *= sig[:, H:]
            c += sig[:, :H] * np.tanh(a[:, 2 * H:3 * H])
            h = o * np.tanh(c)
        logits = _affine(h, Wo, bo, 3, 4, pert)
        return cross_entropy_rows(logits, np.tile(np.atleast_1d(y), reps)).reshape(-1, m).mean(axis=1)


@dataclass
class TrainResult:
    model: object
    loss_curve: list[float] = field(default_factory=list)


def sgd_train(model, X, y, *, learning_rate: float, epochs: int, batch_size: int,
              rng: np.random.Generator) -> list[float]:
    """Plain minibatch SGD, in place. Returns full-data loss before and after each epoch."""
    n = len(X)
    curve = [model.loss(X, y)]
    params = model.parameters()
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            _, grads = model.loss_and_grads(X[idx], y[idx])
            for p, g in zip(params, grads):
                p -= learning_rate * g
        curve.append(model.loss(X, y))
    return curve


# ---------------------------------------------------------------------------
# finite-difference gradient check

_REFINE_ABOVE = 1e-6
_MAX_ROWS = 8192


def _relative_error(a: np.ndarray, fd: np.ndarray) -> np.ndarray:
    return np.abs(a - fd) / np.maximum(np.maximum(np.abs(a), np.abs(fd)), 1e-12)


def _batched_fd(model, X, y, shapes, pids, flats, epsilon, dtype) -> np.ndarray:
    m = len(np.atleast_1d(y))
    out = np.empty(len(pids))
    per_chunk = max(1, _MAX_ROWS // (2 * m))
    for s in range(0, len(pids), per_chunk):
        pid = pids[s:s + per_chunk]
        flat = flats[s:s + per_chunk]
        nb = len(pid)
        # vectors: column index is the flat index; matrices: (row, col)
        ncols = np.array([s[1] if len(s) == 2 else 0 for s in shapes])[pid]
        i = np.where(ncols > 0, flat // np.maximum(ncols, 1), 0)
        k = np.where(ncols > 0, flat % np.maximum(ncols, 1), flat)
        # rows [0, nb*m) use +eps, rows [nb*m, 2*nb*m) use -eps
        both = np.concatenate
        rep = lambda a: np.repeat(a, m)  # noqa: E731
        rows = np.arange(2 * nb * m)
        pert = Perturbation(rows, both([rep(pid)] * 2), both([rep(i)] * 2), both([rep(k)] * 2),
                            both([np.full(nb * m, epsilon), np.full(nb * m, -epsilon)]).astype(dtype))
        losses = model.perturbed_losses(X, y, pert, 2 * nb * m, dtype=dtype)
        out[s:s + nb] = np.asarray((losses[:nb] - losses[nb:]) / (2 * dtype(epsilon)), dtype=float)
    return out


def _looped_fd(model, X, y, epsilon) -> list[np.ndarray]:
    fds = []
    for p in model.parameters():
        fd = np.zeros_like(p, dtype=float)
        flat = p.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + epsilon
            lp = model.loss(X, y)
            flat[j] = old - epsilon
            lm = model.loss(X, y)
            flat[j] = old
            fd.reshape(-1)[j] = (lp - lm) / (2 * epsilon)
        fds.append(fd)
    return fds


def gradient_check(model, sample, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    ``sample`` is ``(X, y)``. Models offering ``perturbed_losses`` are checked
    in vectorised batches; entries whose double-precision finite difference
    disagrees beyond 1e-6 are re-evaluated in extended precision, since
    cancellation in ``L(+eps) - L(-eps)`` dominates there for tiny gradients.
    Any other model only needs ``parameters``, ``loss`` and ``loss_and_grads``.
    """
    if not (1e-7 <= epsilon <= 1e-4):
        raise ValueError("epsilon must lie in [1e-7, 1e-4]")
    X, y = sample
    _, grads = model.loss_and_grads(X, y)
    analytic = np.concatenate([g.ravel() for g in grads])
    if not hasattr(model, "perturbed_losses"):
        fd = np.concatenate([f.ravel() for f in _looped_fd(model, X, y, epsilon)])
        return float(_relative_error(analytic, fd).max(initial=0.0))
    shapes = [p.shape for p in model.parameters()]
    pids = np.concatenate([np.full(int(np.prod(s)), j) for j, s in enumerate(shapes)])
    flats = np.concatenate([np.arange(int(np.prod(s))) for s in shapes])
    fd = _batched_fd(model, X, y, shapes, pids, flats, epsilon, np.float64)
    err = _relative_error(analytic, fd)
    suspect = np.flatnonzero(err > _REFINE_ABOVE)
    if suspect.size:
        fd_ext = _batched_fd(model, X, y, shapes, pids[suspect], flats[suspect], epsilon, np.longdouble)
        err[suspect] = _relative_error(analytic[suspect], fd_ext)
    return float(err.max(initial=0.0))
