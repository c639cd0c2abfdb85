"""Predictor interface and shared prediction plumbing.

Two predictor families exist: VA-output models return a decimal visual
acuity (always clamped to the valid chart range) from which a therapy
label is derived, and label-native models return the label directly.

For VA-output models the evaluated change at examination i is chained
against the model's own previous prediction: the first evaluated
examination is compared to the last observed ground-truth VA, every later
one to the prediction before it. This mirrors how expert forecasts are
scored examination by examination and shapes every reported score.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from ..cohort import (
    VA_DECIMAL_MAX,
    VA_DECIMAL_MIN,
    WslLabel,
    classify_delta,
    to_logmar,
)
from ..features import FeatureWindow


def clamp_decimal(va: float) -> float:
    return min(max(va, VA_DECIMAL_MIN), VA_DECIMAL_MAX)


class Predictor:
    """Interface: fit(...) then predict_va(window) or predict_label(window)."""

    model_id = "predictor"
    label_native = False

    def predict_va(self, window: FeatureWindow) -> float:
        raise NotImplementedError

    def predict_label(self, window: FeatureWindow) -> WslLabel:
        raise NotImplementedError


@dataclass
class PredictionResult:
    pseudo_id: str
    eye: str
    index: int
    model_id: str
    label: WslLabel
    predicted_va_decimal: float | None = None  # None for label-native models
    delta_va: float | None = None              # chained logMAR change
    target_date: date | None = None

    def to_dict(self) -> dict:
        return {
            "patient": self.pseudo_id,
            "eye": self.eye,
            "index": self.index,
            "model": self.model_id,
            "label": self.label.value,
            "predicted_va_decimal": self.predicted_va_decimal,
            "delta_va": self.delta_va,
            "target_date": self.target_date.isoformat() if self.target_date else None,
        }


def truth_label(window: FeatureWindow) -> WslLabel:
    """Ground-truth label of a window: change from its last column to its target."""
    return classify_delta(window.target_va_logmar - to_logmar(window.prev_va_decimal))


def predict_windows(predictor: Predictor, windows) -> list:
    """Run a predictor over consecutive windows of one eye, chaining deltas.

    Windows must belong to a single (patient, eye) series in ascending
    target order; use predict_many for mixed window sets.
    """
    results = []
    prev_pred_logmar = None
    prev_index = None
    for win in windows:
        if prev_index is not None and win.target_index != prev_index + 1:
            prev_pred_logmar = None  # gap: restart the chain from ground truth
        prev_index = win.target_index
        if predictor.label_native:
            label = predictor.predict_label(win)
            results.append(
                PredictionResult(
                    pseudo_id=win.pseudo_id,
                    eye=win.eye,
                    index=win.target_index,
                    model_id=predictor.model_id,
                    label=label,
                    target_date=win.target_date,
                )
            )
            continue
        va = clamp_decimal(predictor.predict_va(win))
        lm = to_logmar(va)
        baseline = prev_pred_logmar
        if baseline is None:
            baseline = to_logmar(win.prev_va_decimal)
        delta = lm - baseline
        prev_pred_logmar = lm
        results.append(
            PredictionResult(
                pseudo_id=win.pseudo_id,
                eye=win.eye,
                index=win.target_index,
                model_id=predictor.model_id,
                label=classify_delta(delta),
                predicted_va_decimal=va,
                delta_va=delta,
                target_date=win.target_date,
            )
        )
    return results


def predict_many(predictor: Predictor, windows) -> list:
    """Predict over a mixed window set, grouped per (patient, eye) series."""
    groups: dict = {}
    for win in windows:
        groups.setdefault((win.pseudo_id, win.eye), []).append(win)
    results = []
    for key in sorted(groups):
        series = sorted(groups[key], key=lambda w: w.target_index)
        results.extend(predict_windows(predictor, series))
    return results
