"""Hot numeric kernels: JIT-compiled with numba, with a pure-NumPy fallback.

The fallback is selected by setting ``VISUS_NO_NUMBA=1`` in the environment
(and automatically when numba is not importable). Both paths implement the
identical split-search contract so that trees built in either mode agree:

* candidate thresholds are midpoints between adjacent distinct values of a
  feature after a stable (mergesort) ordering;
* the score of a split is the summed squared error of both children;
* ties are broken by the first feature in scan order, then the lower
  threshold (strict ``<`` comparison / first arg-minimum).

Prefix sums are accumulated sequentially in float64 in both paths, so on
data whose partial sums are exactly representable the two modes produce
bit-identical trees. ``benchmarks/bench_split.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

_env_disabled = os.environ.get("VISUS_NO_NUMBA", "").strip() in ("1", "true", "yes")

if not _env_disabled:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled


def _best_split_loop(X, y, feats, min_leaf):
    n = X.shape[0]
    best_feat = -1
    best_thr = 0.0
    best_score = np.inf
    for fi in range(feats.shape[0]):
        f = feats[fi]
        xcol = X[:, f].copy()
        order = np.argsort(xcol, kind="mergesort")
        xs = xcol[order]
        if xs[0] == xs[n - 1]:
            continue
        ys = y[order]
        total = 0.0
        total_sq = 0.0
        for i in range(n):
            total += ys[i]
            total_sq += ys[i] * ys[i]
        run = 0.0
        run_sq = 0.0
        for i in range(n - 1):
            run += ys[i]
            run_sq += ys[i] * ys[i]
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            if xs[i] == xs[i + 1]:
                continue
            sl = run
            sr = total - run
            score = (run_sq - sl * sl / nl) + (total_sq - run_sq - sr * sr / nr)
            if score < best_score:
                best_score = score
                best_feat = f
                best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_feat, best_thr, best_score


def _best_split_numpy(X, y, feats, min_leaf):
    n = X.shape[0]
    best_feat = -1
    best_thr = 0.0
    best_score = np.inf
    counts = np.arange(1, n, dtype=np.float64)
    for f in feats:
        xcol = X[:, f]
        order = np.argsort(xcol, kind="mergesort")
        xs = xcol[order]
        if xs[0] == xs[-1]:
            continue
        ys = y[order]
        cs = np.cumsum(ys)
        cq = np.cumsum(ys * ys)
        total = cs[-1]
        total_sq = cq[-1]
        nl = counts
        nr = n - counts
        sl = cs[:-1]
        sql = cq[:-1]
        sr = total - sl
        score = (sql - sl * sl / nl) + (total_sq - sql - sr * sr / nr)
        invalid = (xs[:-1] == xs[1:]) | (nl < min_leaf) | (nr < min_leaf)
        score[invalid] = np.inf
        i = int(np.argmin(score))
        if score[i] < best_score:
            best_score = float(score[i])
            best_feat = int(f)
            best_thr = float((xs[i] + xs[i + 1]) / 2.0)
    return best_feat, best_thr, best_score


if HAVE_NUMBA:
    _best_split_numba = njit(cache=True)(_best_split_loop)
else:  # pragma: no cover
    _best_split_numba = _best_split_loop


def best_split(X, y, feats, min_leaf):
    """Find the squared-error-optimal split of a node.

    Args:
        X: float64 array (n_samples, n_features), the node's rows.
        y: float64 array (n_samples,), regression targets.
        feats: int64 array of feature indices to scan, in canonical order.
        min_leaf: minimum samples required on each side of the split.

    Returns:
        (feature, threshold, score) with feature == -1 when no valid
        split exists; score is the post-split total squared error.
    """
    if USE_NUMBA:
        return _best_split_numba(X, y, feats, min_leaf)
    return _best_split_numpy(X, y, feats, min_leaf)
