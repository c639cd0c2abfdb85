"""Linear discriminant analysis with pooled-covariance regularization."""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyDataset

# Regularization grid for cross-validated selection, as multiples of the
# average covariance eigenvalue (trace / dims).
LAMBDA_GRID = (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1e-1)


class LinearDiscriminant:
    """Gaussian LDA: shared covariance, per-class means and log-priors."""

    def __init__(self, regularization: float | None = None):
        self.requested_lambda = regularization
        self.regularization = 0.0   # effective lambda actually applied
        self.classes_ = None
        self.coef_ = None
        self.intercept_ = None
        self.means_ = None

    def fit(self, X, y) -> "LinearDiscriminant":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise EmptyDataset("LDA needs samples")
        self.classes_ = np.unique(y)
        n, d = X.shape
        means = np.stack([X[y == c].mean(axis=0) for c in self.classes_])
        pooled = np.zeros((d, d))
        for i, c in enumerate(self.classes_):
            centered = X[y == c] - means[i]
            pooled += centered.T @ centered
        denom = max(n - len(self.classes_), 1)
        pooled /= denom
        scale = np.trace(pooled) / d
        if scale <= 0 or not math.isfinite(scale):
            scale = 1.0

        lambdas = [self.requested_lambda] if self.requested_lambda is not None else []
        lambdas += [lam for lam in LAMBDA_GRID if self.requested_lambda is None]
        inv = None
        for lam in lambdas:
            candidate = pooled + lam * scale * np.eye(d)
            try:
                # Cholesky doubles as the singularity probe.
                chol = np.linalg.cholesky(candidate)
                inv = np.linalg.inv(chol.T) @ np.linalg.inv(chol)
                self.regularization = lam
                break
            except np.linalg.LinAlgError:
                continue
        if inv is None:
            # Scatter singular at every grid point: fall back to identity metric.
            inv = np.eye(d) / scale
            self.regularization = float("inf")

        priors = np.array([(y == c).mean() for c in self.classes_])
        self.means_ = means
        self.coef_ = means @ inv
        self.intercept_ = -0.5 * np.einsum("ij,ij->i", self.coef_, means) + np.log(priors)
        return self

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision(X)
        # argmax keeps the first (lowest class value) on exact ties
        return self.classes_[np.argmax(scores, axis=1)]


def stratified_folds(y, k: int, seed: int):
    """Deterministic stratified k-fold assignment; returns fold index per sample."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold = np.zeros(len(y), dtype=int)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        for pos, sample in enumerate(idx):
            fold[sample] = pos % k
    return fold


def cross_validated_lda(X, y, k: int = 5, seed: int = 0):
    """Select the covariance regularization by stratified k-fold accuracy.

    Returns (fitted LinearDiscriminant on all data, chosen lambda,
    per-lambda mean accuracies). Ties prefer the smaller lambda.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    k = min(k, max(2, min(np.bincount(_dense_codes(y)))))
    folds = stratified_folds(y, k, seed)
    accuracies = {}
    for lam in LAMBDA_GRID:
        correct = 0
        total = 0
        for f in range(k):
            train_mask = folds != f
            if len(np.unique(y[train_mask])) < 2:
                continue
            model = LinearDiscriminant(regularization=lam).fit(X[train_mask], y[train_mask])
            pred = model.predict(X[~train_mask])
            correct += int((pred == y[~train_mask]).sum())
            total += int((~train_mask).sum())
        accuracies[lam] = correct / total if total else 0.0
    best = max(LAMBDA_GRID, key=lambda lam: (accuracies[lam], -lam))
    final = LinearDiscriminant(regularization=best).fit(X, y)
    return final, best, accuracies


def _dense_codes(y):
    _, codes = np.unique(y, return_inverse=True)
    return codes
