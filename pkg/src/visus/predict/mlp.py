"""Feed-forward VA regressor on flattened padded windows.

Inputs are standardized with train-set statistics; the network regresses
logMAR and predictions are converted back to the clamped decimal scale at
the boundary.
"""

from __future__ import annotations

import numpy as np

from ..cohort import to_decimal
from ..errors import EmptyDataset
from ..features import MAX_WINDOW, N_ROWS
from ..nn import Mlp, TrainConfig, train
from .base import Predictor, clamp_decimal

DEFAULT_HIDDEN = (64, 64)


class MlpVaPredictor(Predictor):
    model_id = "mlp"

    def __init__(self, hidden=DEFAULT_HIDDEN):
        self.hidden = tuple(hidden)
        self.net: Mlp | None = None
        self.mean = None
        self.std = None
        self.config: TrainConfig | None = None
        self.train_result = None

    @staticmethod
    def design_matrix(windows) -> np.ndarray:
        return np.stack([w.padded().ravel() for w in windows])

    def fit(self, train_windows, val_windows=None, config: TrainConfig | None = None):
        if not train_windows:
            raise EmptyDataset("no training windows")
        self.config = config or TrainConfig()
        X = self.design_matrix(train_windows)
        y = np.array([w.target_va_logmar for w in train_windows])
        self.mean = X.mean(axis=0)
        self.std = X.std(axis=0)
        self.std[self.std == 0] = 1.0
        Xs = (X - self.mean) / self.std
        Xv = yv = None
        if val_windows:
            Xv = (self.design_matrix(val_windows) - self.mean) / self.std
            yv = np.array([w.target_va_logmar for w in val_windows])
        n_in = N_ROWS * MAX_WINDOW
        self.net = Mlp([n_in, *self.hidden, 1], seed=self.config.seed, task="regression")
        self.train_result = train(self.net, Xs, y, Xv, yv, self.config)
        return self

    def predict_logmar(self, window) -> float:
        x = (window.padded().ravel() - self.mean) / self.std
        return float(self.net.predict(x[None, :])[0])

    def predict_va(self, window) -> float:
        return clamp_decimal(to_decimal(self.predict_logmar(window)))
