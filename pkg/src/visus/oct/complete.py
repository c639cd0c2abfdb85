"""Two-stage training and corpus-wide completion of biomarker labels."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadSliceCount, MissingSlice
from ..ingest.corpus import (
    BIOMARKERS,
    LABEL_PATHOLOGICAL,
    LABEL_UNKNOWN,
    PROVENANCE_ANNOTATED,
    PROVENANCE_CLASSIFIED,
)
from ..nn import Mlp
from ..predict.trees import RegressionTree
from .aggregate import ScanAggregator, aggregate_scan
from .classifiers import (
    SLICE_CLASSIFIER_KINDS,
    LogisticSliceClassifier,
    MlpSliceClassifier,
)
from .slices import DEFAULT_RESOLUTION, SLICE_HI, SLICE_LO, extract_slices

MODEL_FORMAT_VERSION = 1


def binary_f1(y_true, y_pred) -> float:
    """F1 of the positive (pathological) class; 0/0 ratios count as 0."""
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class SliceTrainReport:
    biomarker: str
    kind: str
    seed: int
    n_train: int
    n_validation: int
    train_f1: float
    validation_f1: float


def _stratified_holdout(y, fraction: float, seed: int):
    """Seeded stratified split; returns (train_idx, holdout_idx)."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train_idx, hold_idx = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        k = max(1, int(round(fraction * len(idx)))) if len(idx) > 1 else 0
        hold_idx.extend(idx[:k])
        train_idx.extend(idx[k:])
    return np.sort(np.array(train_idx, dtype=int)), np.sort(np.array(hold_idx, dtype=int))


def train_slice_classifier(X, y, biomarker: str, kind: str = "logreg", seed: int = 0):
    """Fit one slice classifier; returns (classifier, SliceTrainReport).

    A stratified tenth of the data is held out for the validation score.
    Raises DegenerateLabels when only one class is present.
    """
    if kind not in SLICE_CLASSIFIER_KINDS:
        raise ValueError(f"kind must be one of {tuple(SLICE_CLASSIFIER_KINDS)}, got {kind!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    train_idx, val_idx = _stratified_holdout(y, 0.1, seed)
    classifier = SLICE_CLASSIFIER_KINDS[kind]()
    classifier.fit(X[train_idx], y[train_idx], seed=seed)
    train_pred = classifier.confidence(X[train_idx]) >= 0.5
    val_pred = classifier.confidence(X[val_idx]) >= 0.5 if len(val_idx) else np.array([])
    report = SliceTrainReport(
        biomarker=biomarker,
        kind=kind,
        seed=seed,
        n_train=len(train_idx),
        n_validation=len(val_idx),
        train_f1=binary_f1(y[train_idx], train_pred),
        validation_f1=binary_f1(y[val_idx], val_pred) if len(val_idx) else 0.0,
    )
    return classifier, report


@dataclass
class BiomarkerModel:
    """One slice classifier plus one scan aggregator for a single biomarker."""

    biomarker: str
    kind: str
    seed: int
    resolution: int = DEFAULT_RESOLUTION
    lo: int = SLICE_LO
    hi: int = SLICE_HI
    classifier: object = None
    aggregator: ScanAggregator = None
    report: SliceTrainReport = None

    def slice_confidences(self, slice_stack: np.ndarray) -> np.ndarray:
        flat = slice_stack.reshape(slice_stack.shape[0], -1)
        return self.classifier.confidence(flat)

    def classify_scan(self, slice_stack: np.ndarray):
        return aggregate_scan(self.slice_confidences(slice_stack), self.aggregator)


def train_two_stage(slice_stacks, scan_labels, biomarker: str,
                    kind: str = "logreg", seed: int = 0,
                    resolution: int = DEFAULT_RESOLUTION,
                    lo: int = SLICE_LO, hi: int = SLICE_HI) -> BiomarkerModel:
    """Train slice classifier and scan aggregator for one biomarker.

    slice_stacks: array (n_scans, n_slices, res, res) in [0, 1];
    scan_labels: 0/1 per scan (slices inherit their scan's label).
    """
    stacks = np.asarray(slice_stacks, dtype=float)
    labels = np.asarray(scan_labels, dtype=float)
    n_scans, n_slices = stacks.shape[0], stacks.shape[1]
    X_slices = stacks.reshape(n_scans * n_slices, -1)
    y_slices = np.repeat(labels, n_slices)
    classifier, report = train_slice_classifier(X_slices, y_slices, biomarker, kind, seed)
    confidences = classifier.confidence(X_slices).reshape(n_scans, n_slices)
    aggregator = ScanAggregator(seed=seed).fit(confidences, labels)
    return BiomarkerModel(
        biomarker=biomarker,
        kind=kind,
        seed=seed,
        resolution=resolution,
        lo=lo,
        hi=hi,
        classifier=classifier,
        aggregator=aggregator,
        report=report,
    )


@dataclass
class CompletionReport:
    completed: int = 0
    already_known: int = 0
    skipped: list = field(default_factory=list)  # (scan_id, biomarker, reason)

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "already_known": self.already_known,
            "skipped": [list(s) for s in self.skipped],
        }


def complete_documentation(corpus, models: dict):
    """Fill every unknown biomarker label with a classified one.

    Annotated labels are never overwritten. Scans whose slice files are
    unreadable stay unknown and are reported. Returns (corpus, report).
    """
    report = CompletionReport()
    for patient in corpus.patients:
        for _side, eye in sorted(patient.eyes.items()):
            for scan in eye.oct_scans:
                stack_cache = {}
                for b in BIOMARKERS:
                    state = scan.biomarkers.get(b)
                    if state is None:
                        continue
                    if state.label != LABEL_UNKNOWN:
                        report.already_known += 1
                        continue
                    model = models.get(b)
                    if model is None:
                        report.skipped.append((scan.scan_id, b, "no model"))
                        continue
                    key = (model.lo, model.hi, model.resolution)
                    if key not in stack_cache:
                        try:
                            stack_cache[key] = extract_slices(
                                scan, model.lo, model.hi, model.resolution
                            )
                        except (MissingSlice, BadSliceCount, OSError, ValueError) as exc:
                            stack_cache[key] = exc
                    stack = stack_cache[key]
                    if isinstance(stack, Exception):
                        report.skipped.append((scan.scan_id, b, str(stack)))
                        continue
                    label, confidence = model.classify_scan(stack)
                    state.label = label
                    state.provenance = PROVENANCE_CLASSIFIED
                    state.confidence = confidence
                    report.completed += 1
    return corpus, report


# -- model persistence ---------------------------------------------------

def model_to_dict(model: BiomarkerModel) -> dict:
    config = {
        "biomarker": model.biomarker,
        "kind": model.kind,
        "seed": model.seed,
        "resolution": model.resolution,
        "lo": model.lo,
        "hi": model.hi,
    }
    if model.kind == "logreg":
        clf = model.classifier
        clf_params = {
            "l2": clf.l2,
            "learning_rate": clf.learning_rate,
            "epochs": clf.epochs,
            "w": clf.w.tolist(),
            "b": clf.b,
            "mean": clf.mean.tolist(),
        }
    else:
        clf = model.classifier
        clf_params = {
            "hidden": list(clf.hidden),
            "epochs": clf.epochs,
            "batch_size": clf.batch_size,
            "mean": clf.mean.tolist(),
            "layer_sizes": list(clf.net.layer_sizes),
            "net_seed": clf.net.seed,
            "weights": [w.tolist() for w in clf.net.weights],
            "biases": [b.tolist() for b in clf.net.biases],
        }
    agg = model.aggregator
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "config": config,
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest(),
        "slice_classifier": clf_params,
        "aggregator": {
            "n_estimators": agg.n_estimators,
            "max_depth": agg.max_depth,
            "seed": agg.seed,
            "max_features": agg.forest.ensemble.max_features,
            "trees": [t.to_dict() for t in agg.forest.ensemble.trees],
        },
        "report": {
            "train_f1": model.report.train_f1 if model.report else None,
            "validation_f1": model.report.validation_f1 if model.report else None,
        },
    }


def model_from_dict(data: dict) -> BiomarkerModel:
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported oct model version {data.get('format_version')!r}")
    config = data["config"]
    clf_params = data["slice_classifier"]
    if config["kind"] == "logreg":
        clf = LogisticSliceClassifier(
            l2=clf_params["l2"],
            learning_rate=clf_params["learning_rate"],
            epochs=clf_params["epochs"],
        )
        clf.w = np.array(clf_params["w"], dtype=float)
        clf.b = clf_params["b"]
        clf.mean = np.array(clf_params["mean"], dtype=float)
    else:
        clf = MlpSliceClassifier(
            hidden=tuple(clf_params["hidden"]),
            epochs=clf_params["epochs"],
            batch_size=clf_params["batch_size"],
        )
        clf.mean = np.array(clf_params["mean"], dtype=float)
        clf.net = Mlp(clf_params["layer_sizes"], seed=clf_params["net_seed"], task="binary")
        clf.net.weights = [np.array(w, dtype=float) for w in clf_params["weights"]]
        clf.net.biases = [np.array(b, dtype=float) for b in clf_params["biases"]]
    agg_params = data["aggregator"]
    aggregator = ScanAggregator(
        n_estimators=agg_params["n_estimators"],
        max_depth=agg_params["max_depth"],
        seed=agg_params["seed"],
    )
    aggregator.forest.ensemble.max_features = agg_params["max_features"]
    aggregator.forest.ensemble.trees = [
        RegressionTree.from_dict(t) for t in agg_params["trees"]
    ]
    return BiomarkerModel(
        biomarker=config["biomarker"],
        kind=config["kind"],
        seed=config["seed"],
        resolution=config["resolution"],
        lo=config["lo"],
        hi=config["hi"],
        classifier=clf,
        aggregator=aggregator,
    )


def save_model(model: BiomarkerModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> BiomarkerModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
