"""Per-examination prediction over a patient's series, chained deltas."""

import pytest

from visus.cohort import WslLabel, classify_delta, to_decimal
from visus.evaluation import confusion
from visus.features import build_windows
from visus.predict import predict_series, predict_windows, truth_label

from conftest import (
    EXPERT_FORECAST_LOGMAR,
    REFERENCE_SERIES_LOGMAR,
    ReplayPredictor,
    expert_replay,
    patient_with_series,
)

W, S, L = WslLabel.WINNER, WslLabel.STABILIZER, WslLabel.LOSER


def _truth_labels(patient, eye="right"):
    return {w.target_index: truth_label(w) for w in build_windows(patient, eye)}


class TestReferenceSeries:
    def test_truth_labels(self, reference_patient):
        truth = _truth_labels(reference_patient)
        assert truth[4] == L
        assert truth[5] == W
        assert truth[9] == S  # +0.1 sits on the stabilizer boundary
        assert truth[13] == L
        assert truth[18] == L
        assert sum(1 for v in truth.values() if v == S) == 11

    def test_expert_scored_against_truth(self, reference_patient):
        results = predict_series(expert_replay(), reference_patient, "right")
        assert len(results) == 15
        truth = _truth_labels(reference_patient)
        wrong = [r.index for r in results if r.label != truth[r.index]]
        assert wrong == [4, 5, 18]

    def test_expert_chained_deltas(self, reference_patient):
        # the forecast at each examination is compared with the expert's own
        # previous forecast; first examination compares with observed VA
        results = predict_series(expert_replay(), reference_patient, "right")
        by_index = {r.index: r for r in results}
        assert by_index[4].delta_va == pytest.approx(0.0)
        assert by_index[5].delta_va == pytest.approx(0.0)
        assert by_index[9].delta_va == pytest.approx(0.1)
        assert by_index[13].delta_va == pytest.approx(0.2)
        assert by_index[18].delta_va == pytest.approx(0.0)

    def test_perfect_oracle_scores_15_of_15(self, reference_patient):
        oracle = ReplayPredictor(
            {i: to_decimal(lm) for i, lm in enumerate(REFERENCE_SERIES_LOGMAR)}
        )
        results = predict_series(oracle, reference_patient, "right")
        truth = _truth_labels(reference_patient)
        assert all(r.label == truth[r.index] for r in results)

    def test_constant_predictor_on_constant_series(self):
        patient = patient_with_series([0.5] * 9)
        constant = ReplayPredictor({i: to_decimal(0.5) for i in range(9)})
        results = predict_series(constant, patient, "right")
        assert all(r.label == S for r in results)

    def test_expert_confusion_trace(self, reference_patient):
        results = predict_series(expert_replay(), reference_patient, "right")
        truth = _truth_labels(reference_patient)
        matrix = confusion(
            [r.label for r in results], [truth[r.index] for r in results]
        )
        assert matrix.trace == 12
        assert matrix.total == 15

    def test_label_equals_classify_delta_of_delta(self, reference_patient):
        results = predict_series(expert_replay(), reference_patient, "right")
        for r in results:
            assert r.label == classify_delta(r.delta_va)

    def test_outputs_clamped(self, reference_patient):
        wild = ReplayPredictor({i: 50.0 for i in range(25)})
        results = predict_series(wild, reference_patient, "right")
        assert all(r.predicted_va_decimal == 2.0 for r in results)

    def test_gap_restarts_chain(self, reference_patient):
        windows = build_windows(reference_patient, "right")
        subset = [windows[0], windows[3]]  # indices 4 and 7: non-consecutive
        results = predict_windows(expert_replay(), subset)
        # index 7 compares against observed VA at 6 (0.5), not forecast at 4
        assert results[1].delta_va == pytest.approx(0.0)
