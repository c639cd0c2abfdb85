"""Two-stage predictor: VA regression followed by discriminant labelling.

Stage 1 is the MLP regressor; stage 2 classifies each prediction into a
therapy label via LDA on (predicted VA, last observed VA, their
difference), all in logMAR. The discriminant's covariance regularization
is chosen by stratified cross-validation over the train split.
"""

from __future__ import annotations

import numpy as np

from ..cohort import WslLabel, to_logmar
from ..errors import EmptyDataset
from ..nn import TrainConfig
from .base import Predictor, truth_label
from .lda import LinearDiscriminant, cross_validated_lda
from .mlp import MlpVaPredictor

_LABEL_BY_RANK = {lbl.rank: lbl for lbl in WslLabel}


class MlpLdaPredictor(Predictor):
    model_id = "mlp_lda"
    label_native = True

    def __init__(self, hidden=None, cv_folds: int = 5):
        self.stage1 = MlpVaPredictor(hidden) if hidden else MlpVaPredictor()
        self.cv_folds = cv_folds
        self.lda: LinearDiscriminant | None = None
        self.chosen_lambda = None

    def _stage2_features(self, window) -> np.ndarray:
        pred_lm = self.stage1.predict_logmar(window)
        prev_lm = to_logmar(window.prev_va_decimal)
        return np.array([pred_lm, prev_lm, pred_lm - prev_lm])

    def fit(self, train_windows, val_windows=None, config: TrainConfig | None = None,
            stage1: MlpVaPredictor | None = None):
        """Fit both stages; pass a fitted stage1 to reuse an existing MLP."""
        if not train_windows:
            raise EmptyDataset("no training windows")
        if stage1 is not None:
            self.stage1 = stage1
        else:
            self.stage1.fit(train_windows, val_windows, config)
        X = np.stack([self._stage2_features(w) for w in train_windows])
        y = np.array([truth_label(w).rank for w in train_windows])
        seed = (config or TrainConfig()).seed
        if len(np.unique(y)) < 2:
            # Degenerate train labels: a constant discriminant is all we can do.
            self.lda = LinearDiscriminant().fit(X, y)
            self.chosen_lambda = self.lda.regularization
        else:
            self.lda, self.chosen_lambda, _ = cross_validated_lda(
                X, y, k=self.cv_folds, seed=seed
            )
        return self

    def predict_label(self, window) -> WslLabel:
        rank = int(self.lda.predict(self._stage2_features(window)[None, :])[0])
        return _LABEL_BY_RANK[rank]
