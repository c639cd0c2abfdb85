"""Visual-acuity predictor ensemble and its training protocol."""

from __future__ import annotations

from ..features import build_windows
from .base import (
    PredictionResult,
    Predictor,
    clamp_decimal,
    predict_many,
    predict_windows,
    truth_label,
)
from .baselines import MaEstimator, StatisticalEstimator, WeightedMaEstimator
from .io import load_model, model_from_dict, model_to_dict, save_model
from .lda import LinearDiscriminant, cross_validated_lda
from .mlp import MlpVaPredictor
from .mlp_lda import MlpLdaPredictor
from .split import split_dataset
from .trees import (
    EnsembleVaPredictor,
    RegressionTree,
    TreeEnsembleClassifier,
    TreeEnsembleRegressor,
)

__all__ = [
    "EnsembleVaPredictor",
    "LinearDiscriminant",
    "MaEstimator",
    "MlpLdaPredictor",
    "MlpVaPredictor",
    "PredictionResult",
    "Predictor",
    "RegressionTree",
    "StatisticalEstimator",
    "TreeEnsembleClassifier",
    "TreeEnsembleRegressor",
    "WeightedMaEstimator",
    "clamp_decimal",
    "cross_validated_lda",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict_many",
    "predict_series",
    "predict_windows",
    "save_model",
    "split_dataset",
    "truth_label",
]

MODEL_KINDS = ("statistical", "ma", "weighted_ma", "bagging", "random_forest", "mlp", "mlp_lda")


def make_predictor(kind: str, **kwargs):
    if kind == "statistical":
        return StatisticalEstimator()
    if kind == "ma":
        return MaEstimator()
    if kind == "weighted_ma":
        return WeightedMaEstimator()
    if kind in ("bagging", "random_forest"):
        return EnsembleVaPredictor(kind=kind, **kwargs)
    if kind == "mlp":
        return MlpVaPredictor(**kwargs)
    if kind == "mlp_lda":
        return MlpLdaPredictor(**kwargs)
    raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")


def predict_series(predictor, patient, eye_side: str):
    """One PredictionResult per predictable examination of a patient's eye."""
    windows = build_windows(patient, eye_side)
    return predict_windows(predictor, windows)
