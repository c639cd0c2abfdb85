"""Regression trees and bootstrap ensembles built on the split-search kernel.

The split search is canonical: features are scanned in ascending index
order and score ties keep the first candidate, so a fitted tree does not
depend on training-row order. Bagging draws bootstrap samples and scans
all features per split; the random-forest variant additionally draws a
random feature subset per node.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..cohort import to_decimal
from ..errors import EmptyDataset
from .base import Predictor, clamp_decimal


class RegressionTree:
    def __init__(self, max_depth: int = 12, min_leaf: int = 2, max_features: int | None = None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        # parallel node arrays; leaves have feature == -1
        self.feature: list = []
        self.threshold: list = []
        self.left: list = []
        self.right: list = []
        self.value: list = []

    def fit(self, X, y, rng: np.random.Generator | None = None) -> "RegressionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot fit a tree on zero samples")
        if rng is None:
            rng = np.random.default_rng(0)
        self._grow(X, y, np.arange(X.shape[0]), depth=0, rng=rng)
        return self

    def _add_leaf(self, value: float) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return idx

    def _grow(self, X, y, rows, depth, rng) -> int:
        ysub = y[rows]
        mean = float(ysub.mean())
        if (
            depth >= self.max_depth
            or rows.size < 2 * self.min_leaf
            or np.all(ysub == ysub[0])
        ):
            return self._add_leaf(mean)
        p = X.shape[1]
        if self.max_features is None or self.max_features >= p:
            feats = np.arange(p, dtype=np.int64)
        else:
            feats = np.sort(rng.choice(p, size=self.max_features, replace=False)).astype(np.int64)
        feat, thr, _score = kernels.best_split(X[rows], ysub, feats, self.min_leaf)
        if feat < 0:
            return self._add_leaf(mean)
        idx = len(self.feature)
        self.feature.append(int(feat))
        self.threshold.append(float(thr))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(mean)
        mask = X[rows, feat] <= thr
        self.left[idx] = self._grow(X, y, rows[mask], depth + 1, rng)
        self.right[idx] = self._grow(X, y, rows[~mask], depth + 1, rng)
        return idx

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.value[node]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array([self.predict_one(row) for row in X])

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": [float(t) for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "value": [float(v) for v in self.value],
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "max_features": self.max_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        tree = cls(d["max_depth"], d["min_leaf"], d["max_features"])
        tree.feature = list(d["feature"])
        tree.threshold = list(d["threshold"])
        tree.left = list(d["left"])
        tree.right = list(d["right"])
        tree.value = list(d["value"])
        return tree


ENSEMBLE_KINDS = ("bagging", "random_forest")


class TreeEnsembleRegressor:
    """Mean of bootstrap-trained regression trees."""

    def __init__(self, kind: str = "bagging", n_estimators: int = 25,
                 max_depth: int = 12, min_leaf: int = 2,
                 bootstrap: bool = True, seed: int = 0,
                 max_features: int | None = None):
        if kind not in ENSEMBLE_KINDS:
            raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}, got {kind!r}")
        self.kind = kind
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.seed = seed
        self.max_features = max_features
        self.trees: list = []

    def _features_per_split(self, p: int) -> int | None:
        if self.max_features is not None:
            return self.max_features
        if self.kind == "bagging":
            return None  # all features
        return max(1, p // 3)

    def fit(self, X, y) -> "TreeEnsembleRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot fit an ensemble on zero samples")
        n, p = X.shape
        max_features = self._features_per_split(p)
        self.trees = []
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        for ss in seeds:
            rng = np.random.default_rng(ss)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = RegressionTree(self.max_depth, self.min_leaf, max_features)
            tree.fit(X[rows], y[rows], rng=rng)
            self.trees.append(tree)
        return self

    def predict(self, X) -> np.ndarray:
        preds = np.zeros(np.asarray(X).shape[0])
        for tree in self.trees:
            preds += tree.predict(X)
        return preds / len(self.trees)


class TreeEnsembleClassifier:
    """Binary forest: per-tree majority votes, confidence = vote fraction."""

    def __init__(self, n_estimators: int = 50, max_depth: int = 10,
                 min_leaf: int = 1, seed: int = 0, max_features: int | None = None,
                 bootstrap: bool = True):
        self.ensemble = TreeEnsembleRegressor(
            kind="random_forest",
            n_estimators=n_estimators,
            max_depth=max_depth,
            min_leaf=min_leaf,
            bootstrap=bootstrap,
            seed=seed,
            max_features=max_features,
        )

    def fit(self, X, y) -> "TreeEnsembleClassifier":
        y = np.asarray(y, dtype=np.float64)
        if set(np.unique(y)) - {0.0, 1.0}:
            raise ValueError("classifier targets must be 0/1")
        p = np.asarray(X).shape[1]
        if self.ensemble.max_features is None:
            self.ensemble.max_features = max(1, int(np.sqrt(p)))
        self.ensemble.fit(X, y)
        return self

    def vote_fraction(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0])
        for tree in self.ensemble.trees:
            votes += (tree.predict(X) >= 0.5).astype(float)
        return votes / len(self.ensemble.trees)

    def predict(self, X) -> np.ndarray:
        return (self.vote_fraction(X) >= 0.5).astype(int)


class EnsembleVaPredictor(Predictor):
    """VA predictor over flattened padded windows, regressing logMAR."""

    def __init__(self, kind: str = "bagging", **kwargs):
        self.ensemble = TreeEnsembleRegressor(kind=kind, **kwargs)
        self.model_id = f"{kind}_regressor"

    @property
    def seed(self):
        return self.ensemble.seed

    def fit(self, train_windows, *_unused, **_unused_kw) -> "EnsembleVaPredictor":
        if not train_windows:
            raise EmptyDataset("no training windows")
        X = np.stack([w.padded().ravel() for w in train_windows])
        y = np.array([w.target_va_logmar for w in train_windows])
        self.ensemble.fit(X, y)
        return self

    def predict_va(self, window) -> float:
        lm = float(self.ensemble.predict(window.padded().ravel()[None, :])[0])
        return clamp_decimal(to_decimal(lm))
