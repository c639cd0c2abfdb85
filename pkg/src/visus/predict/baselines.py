"""Baseline estimators: label-distribution sampling and (weighted) moving
averages over the window's VA values."""

from __future__ import annotations

import numpy as np

from ..cohort import WslLabel
from ..errors import EmptyDataset
from ..features import MISSING, VA_ROW
from .base import Predictor, truth_label

_LABELS = (WslLabel.WINNER, WslLabel.STABILIZER, WslLabel.LOSER)


class StatisticalEstimator(Predictor):
    """Samples the empirical train-set label distribution (label-native)."""

    model_id = "statistical"
    label_native = True

    def __init__(self):
        self.probabilities = None
        self.seed = None
        self._rng = None

    def fit(self, train_windows, seed: int = 0):
        if not train_windows:
            raise EmptyDataset("statistical estimator needs training windows")
        counts = {lbl: 0 for lbl in _LABELS}
        for w in train_windows:
            counts[truth_label(w)] += 1
        total = sum(counts.values())
        self.probabilities = [counts[lbl] / total for lbl in _LABELS]
        self.seed = seed
        self.reset(seed)
        return self

    def reset(self, seed: int | None = None) -> None:
        """Restart the sampling stream (same seed -> same prediction sequence)."""
        self._rng = np.random.default_rng(self.seed if seed is None else seed)

    def predict_label(self, window) -> WslLabel:
        idx = self._rng.choice(len(_LABELS), p=self.probabilities)
        return _LABELS[int(idx)]


def _window_vas(window) -> np.ndarray:
    row = window.matrix[VA_ROW]
    return row[row != MISSING]


class MaEstimator(Predictor):
    """Arithmetic mean of the window's non-missing VA values."""

    model_id = "ma"

    def fit(self, *_args, **_kwargs):
        return self

    def predict_va(self, window) -> float:
        vas = _window_vas(window)
        return float(vas.mean())


class WeightedMaEstimator(Predictor):
    """Linearly weighted mean: weights 1..k, most recent value weighted k."""

    model_id = "weighted_ma"

    def fit(self, *_args, **_kwargs):
        return self

    def predict_va(self, window) -> float:
        vas = _window_vas(window)
        weights = np.arange(1, len(vas) + 1, dtype=float)
        return float((vas * weights).sum() / weights.sum())
