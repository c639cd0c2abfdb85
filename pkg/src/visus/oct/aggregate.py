"""Scan-wise aggregation of slice confidences via a random forest."""

from __future__ import annotations

import numpy as np

from ..ingest.corpus import LABEL_PATHOLOGICAL, LABEL_PHYSIOLOGICAL
from ..predict.trees import TreeEnsembleClassifier

AGGREGATE_DIM = 11  # slices 8..18


class ScanAggregator:
    """Forest over the ordered slice-confidence vector of one scan."""

    def __init__(self, n_estimators: int = 50, max_depth: int = 8, seed: int = 0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.seed = seed
        self.forest = TreeEnsembleClassifier(
            n_estimators=n_estimators, max_depth=max_depth, seed=seed
        )

    def fit(self, confidence_vectors, labels) -> "ScanAggregator":
        X = np.asarray(confidence_vectors, dtype=float)
        if X.shape[1] != AGGREGATE_DIM:
            raise ValueError(f"expected {AGGREGATE_DIM}-dim confidence vectors, got {X.shape[1]}")
        self.forest.fit(X, np.asarray(labels, dtype=float))
        return self

    def vote_fraction(self, confidence_vector) -> float:
        X = np.asarray(confidence_vector, dtype=float).reshape(1, -1)
        if X.shape[1] != AGGREGATE_DIM:
            raise ValueError(f"expected {AGGREGATE_DIM}-dim confidence vector, got {X.shape[1]}")
        return float(self.forest.vote_fraction(X)[0])


def aggregate_scan(confidences, aggregator: ScanAggregator):
    """Binary biomarker decision for one scan.

    Returns (label, confidence) where confidence is the fraction of trees
    voting pathological (1 - that fraction for physiological labels).
    """
    confidences = np.asarray(confidences, dtype=float)
    if np.any(confidences < 0) or np.any(confidences > 1):
        raise ValueError("slice confidences must lie in [0, 1]")
    vote = aggregator.vote_fraction(confidences)
    if vote >= 0.5:
        return LABEL_PATHOLOGICAL, vote
    return LABEL_PHYSIOLOGICAL, 1.0 - vote
