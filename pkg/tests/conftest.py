"""Shared fixtures: a hand-checked 19-examination reference series with the
expert's forecasts, and small corpus builders."""

from __future__ import annotations

from datetime import date, timedelta

import pytest

from visus.cohort import VaSeries, to_decimal
from visus.ingest.corpus import PatientRecord
from visus.predict.base import Predictor

# 19-point logMAR series with a known outcome: the per-examination truth
# labels are L at 4, W at 5, L at 13 and 18, S elsewhere; forecasts are
# evaluated from examination 4 on (15 points).
REFERENCE_SERIES_LOGMAR = [
    0.6, 0.6, 0.8, 0.5, 0.8, 0.5, 0.5, 0.5, 0.5, 0.6,
    0.6, 0.6, 0.6, 0.8, 0.8, 0.8, 0.8, 0.8, 1.0,
]

# The expert's VA forecasts for examinations 4..18. Scored against the
# truth they are wrong at 4, 5, and 18 and right at the remaining 12.
EXPERT_FORECAST_LOGMAR = [
    0.5, 0.5, 0.5, 0.5, 0.5, 0.6, 0.6, 0.6, 0.6, 0.8,
    0.8, 0.8, 0.8, 0.8, 0.8,
]

BASE_DATE = date(2014, 2, 1)


def series_from_logmar(values, start=BASE_DATE, gap_days=30) -> VaSeries:
    entries = [
        (start + timedelta(days=gap_days * i), lm) for i, lm in enumerate(values)
    ]
    return VaSeries.from_logmar(entries)


def patient_with_series(values, pseudo_id="deadbeef00000001", eye="right",
                        birth_year=1952, sex="female") -> PatientRecord:
    patient = PatientRecord(pseudo_id=pseudo_id, sex=sex, birth_year=birth_year)
    patient.eye(eye).va_series = series_from_logmar(values)
    return patient


class ReplayPredictor(Predictor):
    """Replays a fixed decimal VA forecast per examination index."""

    model_id = "replay"

    def __init__(self, by_index: dict):
        self.by_index = dict(by_index)

    def predict_va(self, window) -> float:
        return self.by_index[window.target_index]


def expert_replay() -> ReplayPredictor:
    return ReplayPredictor(
        {i + 4: to_decimal(lm) for i, lm in enumerate(EXPERT_FORECAST_LOGMAR)}
    )


@pytest.fixture
def reference_patient() -> PatientRecord:
    return patient_with_series(REFERENCE_SERIES_LOGMAR)
