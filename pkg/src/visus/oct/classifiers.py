"""Slice-wise pathological-confidence estimators.

Both implementations work on flattened pixel vectors and weight samples by
inverse class frequency, so the minority pathological class is not drowned
out by ratios of 20:1 and worse. Training is fully seeded.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateLabels
from ..nn import Mlp, TrainConfig, train


def inverse_frequency_weights(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    n = len(y)
    pos = int(y.sum())
    neg = n - pos
    weights = np.where(y == 1, n / (2.0 * pos), n / (2.0 * neg))
    return weights


class SliceClassifier:
    """Interface: fit(X, y, seed) then confidence(X) in [0, 1]."""

    kind = "abstract"

    def fit(self, X, y, seed: int = 0):
        raise NotImplementedError

    def confidence(self, X) -> np.ndarray:
        raise NotImplementedError


class LogisticSliceClassifier(SliceClassifier):
    """L2-regularized logistic regression, trained full-batch with Adam."""

    kind = "logreg"

    def __init__(self, l2: float = 1e-3, learning_rate: float = 0.05, epochs: int = 400):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.w = None
        self.b = 0.0
        self.mean = None

    def loss_and_grad(self, params: np.ndarray, X, y, sample_weight=None):
        """Weighted logistic loss plus L2 penalty of the weights (not bias)."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = X.shape[0]
        if sample_weight is None:
            wvec = np.full(n, 1.0 / n)
        else:
            sw = np.asarray(sample_weight, dtype=float)
            wvec = sw / sw.sum()
        w = params[:-1]
        b = params[-1]
        z = X @ w + b
        loss = float(
            np.sum(wvec * (np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))
            + 0.5 * self.l2 * np.dot(w, w)
        )
        residual = wvec * (_sigmoid(z) - y)
        grad_w = X.T @ residual + self.l2 * w
        grad_b = residual.sum()
        return loss, np.concatenate([grad_w, [grad_b]])

    def fit(self, X, y, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_two_classes(y)
        self.mean = X.mean(axis=0)
        Xc = X - self.mean
        weights = inverse_frequency_weights(y)
        params = np.zeros(X.shape[1] + 1)
        m = np.zeros_like(params)
        v = np.zeros_like(params)
        for step in range(1, self.epochs + 1):
            loss, grad = self.loss_and_grad(params, Xc, y, weights)
            if not math.isfinite(loss):
                raise ArithmeticError(f"non-finite logistic loss at step {step}")
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad * grad
            m_hat = m / (1 - 0.9 ** step)
            v_hat = v / (1 - 0.999 ** step)
            params = params - self.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
        self.w = params[:-1]
        self.b = float(params[-1])
        return self

    def confidence(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float) - self.mean
        return _sigmoid(X @ self.w + self.b)


class MlpSliceClassifier(SliceClassifier):
    """Small rectified network with a logistic output on flattened pixels."""

    kind = "mlp"

    def __init__(self, hidden=(32,), epochs: int = 60, batch_size: int = 32):
        self.hidden = tuple(hidden)
        self.epochs = epochs
        self.batch_size = batch_size
        self.net: Mlp | None = None
        self.mean = None

    def fit(self, X, y, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_two_classes(y)
        self.mean = X.mean(axis=0)
        Xc = X - self.mean
        weights = inverse_frequency_weights(y)
        self.net = Mlp([X.shape[1], *self.hidden, 1], seed=seed, task="binary")
        config = TrainConfig(
            seed=seed, batch_size=self.batch_size, max_epochs=self.epochs, patience=0
        )
        train(self.net, Xc, y, config=config, sample_weight=weights)
        return self

    def confidence(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float) - self.mean
        return self.net.predict(X)


SLICE_CLASSIFIER_KINDS = {
    "logreg": LogisticSliceClassifier,
    "mlp": MlpSliceClassifier,
}


def _check_two_classes(y) -> None:
    classes = np.unique(y)
    if len(classes) < 2:
        raise DegenerateLabels(f"training data contains a single class: {classes}")
    if set(classes.tolist()) - {0.0, 1.0}:
        raise ValueError(f"labels must be 0/1, got {classes}")


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
