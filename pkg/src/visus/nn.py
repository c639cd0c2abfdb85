"""From-scratch feed-forward network used by the VA regressor and the
slice classifier: rectified hidden layers, Glorot-uniform initialization,
adaptive-moment gradient updates, optional early stopping on validation
loss. Everything is seeded and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteLoss


@dataclass
class TrainConfig:
    seed: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20          # epochs without validation improvement; <=0 disables
    min_delta: float = 0.0


class Mlp:
    """Dense network; task is "regression" (MSE) or "binary" (logistic loss)."""

    def __init__(self, layer_sizes, seed: int, task: str = "regression"):
        if task not in ("regression", "binary"):
            raise ValueError(f"unknown task {task!r}")
        self.layer_sizes = list(layer_sizes)
        self.task = task
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    # -- parameter vector helpers (used by the finite-difference checks) --

    def get_params(self) -> np.ndarray:
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        )

    def set_params(self, flat: np.ndarray) -> None:
        pos = 0
        for i, w in enumerate(self.weights):
            self.weights[i] = flat[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
        for i, b in enumerate(self.biases):
            self.biases[i] = flat[pos : pos + b.size].copy()
            pos += b.size

    # -- forward / loss ---------------------------------------------------

    def _forward(self, X):
        acts = [X]
        z = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            if i < len(self.weights) - 1:
                acts.append(np.maximum(z, 0.0))
        return acts, z  # z is the raw output layer

    def predict_raw(self, X) -> np.ndarray:
        _, z = self._forward(np.asarray(X, dtype=float))
        return z[:, 0]

    def predict(self, X) -> np.ndarray:
        z = self.predict_raw(X)
        if self.task == "binary":
            return _sigmoid(z)
        return z

    def loss(self, X, y, sample_weight=None) -> float:
        value, _ = self.loss_and_grad(X, y, sample_weight, need_grad=False)
        return value

    def loss_and_grad(self, X, y, sample_weight=None, need_grad: bool = True):
        """Mean loss over the batch and gradients in get_params() layout."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = X.shape[0]
        if sample_weight is None:
            wvec = np.full(n, 1.0 / n)
        else:
            sw = np.asarray(sample_weight, dtype=float)
            wvec = sw / sw.sum()
        acts, z = self._forward(X)
        out = z[:, 0]
        if self.task == "regression":
            diff = out - y
            value = float(np.sum(wvec * diff * diff))
            dout = 2.0 * wvec * diff
        else:
            # numerically stable logistic loss on raw outputs
            value = float(np.sum(wvec * (np.maximum(out, 0) - out * y + np.log1p(np.exp(-np.abs(out))))))
            dout = wvec * (_sigmoid(out) - y)
        if not need_grad:
            return value, None

        grad_w = [None] * len(self.weights)
        grad_b = [None] * len(self.biases)
        delta = dout[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = acts[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        flat = np.concatenate([g.ravel() for g in grad_w] + [g.ravel() for g in grad_b])
        return value, flat


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class TrainResult:
    epochs_run: int
    best_epoch: int
    train_losses: list
    val_losses: list


def train(model: Mlp, X, y, X_val=None, y_val=None,
          config: TrainConfig | None = None, sample_weight=None) -> TrainResult:
    """Minibatch Adam training with early stopping on validation loss.

    Early stopping requires validation data and config.patience > 0; the
    parameters of the best validation epoch are restored afterwards.
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    rng = np.random.default_rng(config.seed)
    params = model.get_params()
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    step = 0
    use_early_stop = X_val is not None and config.patience > 0
    best_val = math.inf
    best_params = params.copy()
    best_epoch = 0
    since_best = 0
    train_losses = []
    val_losses = []

    epochs_run = 0
    for epoch in range(config.max_epochs):
        epochs_run = epoch + 1
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            bw = None if sample_weight is None else np.asarray(sample_weight)[batch]
            loss, grad = model.loss_and_grad(X[batch], y[batch], bw)
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, loss)
            step += 1
            m = config.beta1 * m + (1 - config.beta1) * grad
            v = config.beta2 * v + (1 - config.beta2) * grad * grad
            m_hat = m / (1 - config.beta1 ** step)
            v_hat = v / (1 - config.beta2 ** step)
            params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
            model.set_params(params)
        train_losses.append(model.loss(X, y, sample_weight))
        if X_val is not None:
            val_loss = model.loss(X_val, y_val)
            val_losses.append(val_loss)
            if val_loss < best_val - config.min_delta:
                best_val = val_loss
                best_params = params.copy()
                best_epoch = epoch + 1
                since_best = 0
            else:
                since_best += 1
                if use_early_stop and since_best >= config.patience:
                    break
    if use_early_stop:
        model.set_params(best_params)
    return TrainResult(
        epochs_run=epochs_run,
        best_epoch=best_epoch if use_early_stop else epochs_run,
        train_losses=train_losses,
        val_losses=val_losses,
    )


def finite_difference_grad(model: Mlp, X, y, sample_weight=None, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the batch loss, for verification."""
    base = model.get_params()
    grad = np.zeros_like(base)
    for k in range(base.size):
        probe = base.copy()
        probe[k] = base[k] + h
        model.set_params(probe)
        up = model.loss(X, y, sample_weight)
        probe[k] = base[k] - h
        model.set_params(probe)
        down = model.loss(X, y, sample_weight)
        grad[k] = (up - down) / (2 * h)
    model.set_params(base)
    return grad
