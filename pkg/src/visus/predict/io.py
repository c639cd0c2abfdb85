"""Versioned JSON persistence for fitted predictors.

Every file carries the model kind, its configuration, a SHA-256 hash of
the canonical configuration JSON for provenance, and the fitted
parameters. Loading restores a predictor whose outputs are bit-identical
to the saved one's.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..nn import Mlp, TrainConfig
from .baselines import MaEstimator, StatisticalEstimator, WeightedMaEstimator
from .lda import LinearDiscriminant
from .mlp import MlpVaPredictor
from .mlp_lda import MlpLdaPredictor
from .trees import EnsembleVaPredictor, RegressionTree

FORMAT_VERSION = 1


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def _train_config_dict(cfg: TrainConfig | None) -> dict:
    cfg = cfg or TrainConfig()
    return {
        "seed": cfg.seed,
        "learning_rate": cfg.learning_rate,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "eps": cfg.eps,
        "batch_size": cfg.batch_size,
        "max_epochs": cfg.max_epochs,
        "patience": cfg.patience,
        "min_delta": cfg.min_delta,
    }


def _train_config_from(d: dict) -> TrainConfig:
    return TrainConfig(**d)


def _mlp_params(p: MlpVaPredictor) -> dict:
    return {
        "hidden": list(p.hidden),
        "layer_sizes": list(p.net.layer_sizes),
        "net_seed": p.net.seed,
        "weights": [w.tolist() for w in p.net.weights],
        "biases": [b.tolist() for b in p.net.biases],
        "mean": p.mean.tolist(),
        "std": p.std.tolist(),
    }


def _restore_mlp(params: dict, config: dict) -> MlpVaPredictor:
    pred = MlpVaPredictor(hidden=tuple(params["hidden"]))
    pred.config = _train_config_from(config)
    pred.net = Mlp(params["layer_sizes"], seed=params["net_seed"], task="regression")
    pred.net.weights = [np.array(w, dtype=float) for w in params["weights"]]
    pred.net.biases = [np.array(b, dtype=float) for b in params["biases"]]
    pred.mean = np.array(params["mean"], dtype=float)
    pred.std = np.array(params["std"], dtype=float)
    return pred


def _lda_params(lda: LinearDiscriminant) -> dict:
    return {
        "classes": [int(c) for c in lda.classes_],
        "coef": lda.coef_.tolist(),
        "intercept": lda.intercept_.tolist(),
        "means": lda.means_.tolist(),
        "regularization": lda.regularization,
    }


def _restore_lda(params: dict) -> LinearDiscriminant:
    lda = LinearDiscriminant()
    lda.classes_ = np.array(params["classes"])
    lda.coef_ = np.array(params["coef"], dtype=float)
    lda.intercept_ = np.array(params["intercept"], dtype=float)
    lda.means_ = np.array(params["means"], dtype=float)
    lda.regularization = params["regularization"]
    return lda


def model_to_dict(predictor) -> dict:
    if isinstance(predictor, StatisticalEstimator):
        config = {"seed": predictor.seed}
        params = {"probabilities": list(predictor.probabilities)}
    elif isinstance(predictor, (MaEstimator, WeightedMaEstimator)):
        config = {}
        params = {}
    elif isinstance(predictor, EnsembleVaPredictor):
        ens = predictor.ensemble
        config = {
            "kind": ens.kind,
            "n_estimators": ens.n_estimators,
            "max_depth": ens.max_depth,
            "min_leaf": ens.min_leaf,
            "bootstrap": ens.bootstrap,
            "seed": ens.seed,
            "max_features": ens.max_features,
        }
        params = {"trees": [t.to_dict() for t in ens.trees]}
    elif isinstance(predictor, MlpLdaPredictor):
        config = _train_config_dict(predictor.stage1.config)
        config["cv_folds"] = predictor.cv_folds
        params = {
            "stage1": _mlp_params(predictor.stage1),
            "lda": _lda_params(predictor.lda),
            "chosen_lambda": predictor.chosen_lambda,
        }
    elif isinstance(predictor, MlpVaPredictor):
        config = _train_config_dict(predictor.config)
        params = _mlp_params(predictor)
    else:
        raise TypeError(f"cannot serialize predictor of type {type(predictor).__name__}")
    return {
        "format_version": FORMAT_VERSION,
        "model": predictor.model_id,
        "config": config,
        "config_hash": config_hash(config),
        "params": params,
    }


def model_from_dict(data: dict):
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {data.get('format_version')!r}")
    kind = data["model"]
    config = data["config"]
    params = data["params"]
    if kind == "statistical":
        pred = StatisticalEstimator()
        pred.probabilities = list(params["probabilities"])
        pred.seed = config["seed"]
        pred.reset()
        return pred
    if kind == "ma":
        return MaEstimator()
    if kind == "weighted_ma":
        return WeightedMaEstimator()
    if kind in ("bagging_regressor", "random_forest_regressor"):
        pred = EnsembleVaPredictor(**config)
        pred.ensemble.trees = [RegressionTree.from_dict(t) for t in params["trees"]]
        return pred
    if kind == "mlp":
        return _restore_mlp(params, config)
    if kind == "mlp_lda":
        cfg = {k: v for k, v in config.items() if k != "cv_folds"}
        pred = MlpLdaPredictor(cv_folds=config.get("cv_folds", 5))
        pred.stage1 = _restore_mlp(params["stage1"], cfg)
        pred.lda = _restore_lda(params["lda"])
        pred.chosen_lambda = params["chosen_lambda"]
        return pred
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(predictor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(predictor), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
