import json
from datetime import date, timedelta

import numpy as np
import pytest

from visus.cohort import VaSeries
from visus.errors import SeriesTooShort
from visus.features import (
    MISSING,
    ROW_INDEX,
    ablate,
    build_all_windows,
    build_windows,
    factorize,
    load_windows,
    save_windows,
)
from visus.ingest.corpus import (
    AnamnesisEvent,
    BiomarkerState,
    Corpus,
    Diagnosis,
    OctMeasurement,
    OctScan,
    PatientRecord,
    Treatment,
)

from conftest import REFERENCE_SERIES_LOGMAR, patient_with_series


class TestFactorize:
    def test_sex_codes(self):
        assert factorize("male", "sex") == 0
        assert factorize("female", "sex") == 1
        assert factorize("diverse", "sex") == 2

    def test_absent_is_missing(self):
        assert factorize(None, "elm") == -1
        assert factorize(None, "medication") == -1

    def test_biomarker_codes(self):
        assert factorize("physiological", "elm") == 0
        assert factorize("pathological", "ped") == 1

    def test_thickness_passthrough(self):
        assert factorize(431, "central_retinal_thickness") == 431

    def test_medication_codes(self):
        assert factorize("Eylea", "medication") == 0
        assert factorize("Lucentis", "medication") == 1


def _golden_patient() -> PatientRecord:
    """Patient whose first window reproduces the documented example vector."""
    birth = date(1960, 1, 1)
    day_offsets = [20461, 20495, 20523, 20551, 20579]
    decimals = [0.8, 0.5, 0.5, 0.5, 0.5]
    patient = PatientRecord(pseudo_id="feedface00000001", sex="male", birth_year=1960)
    eye = patient.eye("right")
    eye.va_series = VaSeries.from_decimal(
        [(birth + timedelta(days=n), v) for n, v in zip(day_offsets, decimals)]
    )
    first = birth + timedelta(days=20461)
    eye.measurements.append(OctMeasurement(date=first, central_retinal_thickness=431))
    patient.anamnesis.append(AnamnesisEvent(first, "blood_thinning"))
    return patient


class TestGoldenWindow:
    def test_reproduces_reference_vector(self):
        windows = build_windows(_golden_patient(), "right")
        assert len(windows) == 1
        m = windows[0].matrix
        assert m.shape == (24, 4)
        assert m[0].tolist() == [20461, 20495, 20523, 20551]
        assert m[3].tolist() == [0.8, 0.5, 0.5, 0.5]
        assert m[ROW_INDEX["central_retinal_thickness"]].tolist() == [431, -1, -1, -1]
        assert m[ROW_INDEX["blood_thinning"]].tolist() == [1, -1, -1, -1]
        populated = {0, 1, 2, 3, ROW_INDEX["central_retinal_thickness"], ROW_INDEX["blood_thinning"]}
        for r in range(24):
            if r in (0, 1, 2, 3):
                assert np.all(m[r] != MISSING)
            elif r in populated:
                assert m[r, 0] != MISSING
                assert np.all(m[r, 1:] == MISSING)
            else:
                assert np.all(m[r] == MISSING), f"row {r} should be all missing"

    def test_value_does_not_bleed_into_later_columns(self):
        # the thickness value is recorded once and must appear exactly once
        windows = build_windows(_golden_patient(), "right")
        row = windows[0].matrix[ROW_INDEX["central_retinal_thickness"]]
        assert (row != MISSING).sum() == 1


class TestBuildWindows:
    def test_window_count_is_length_minus_four(self):
        for n in (5, 8, 19):
            patient = patient_with_series([0.5] * n)
            assert len(build_windows(patient, "right")) == n - 4

    def test_reference_series_yields_15_targets(self):
        patient = patient_with_series(REFERENCE_SERIES_LOGMAR)
        windows = build_windows(patient, "right")
        assert len(windows) == 15
        assert [w.target_index for w in windows] == list(range(4, 19))

    def test_width_caps_at_ten(self):
        patient = patient_with_series([0.5] * 19)
        windows = build_windows(patient, "right")
        widths = {w.target_index: w.width for w in windows}
        assert widths[4] == 4
        assert widths[9] == 9
        assert widths[10] == 10
        assert widths[18] == 10

    def test_too_short_series(self):
        with pytest.raises(SeriesTooShort):
            build_windows(patient_with_series([0.5] * 4), "right")

    def test_va_row_never_missing(self):
        patient = patient_with_series([0.5] * 12)
        for w in build_windows(patient, "right"):
            assert np.all(w.matrix[3] != MISSING)

    def test_padding(self):
        patient = patient_with_series([0.5] * 5)
        w = build_windows(patient, "right")[0]
        padded = w.padded()
        assert padded.shape == (24, 10)
        assert np.all(padded[:, :6] == MISSING)
        assert np.array_equal(padded[:, 6:], w.matrix)

    def test_side_channels_join_to_nearest_preceding_exam(self):
        patient = patient_with_series([0.5] * 6)
        eye = patient.eyes["right"]
        dates = [p.date for p in eye.va_series.points]
        # scan two days after the third exam attaches to the third exam only
        scan = OctScan.stub("SC1", patient.pseudo_id, dates[2] + timedelta(days=2), "right", "d")
        scan.biomarkers["elm"] = BiomarkerState("pathological", "annotated")
        eye.oct_scans.append(scan)
        w = build_windows(patient, "right")[-1]  # columns 1..5 wait width=... target 5, cols 0..4
        row = w.matrix[ROW_INDEX["elm"]]
        col = w.column_indices.index(2)
        assert row[col] == 1
        assert (row != MISSING).sum() == 1

    def test_event_before_first_exam_is_dropped(self):
        patient = patient_with_series([0.5] * 6)
        eye = patient.eyes["right"]
        early = eye.va_series[0].date - timedelta(days=10)
        eye.treatments.append(Treatment(early, "Eylea", "cis"))
        w = build_windows(patient, "right")[0]
        assert np.all(w.matrix[ROW_INDEX["medication"]] == MISSING)

    def test_deterministic_rebuild(self):
        patient = _golden_patient()
        a = build_windows(patient, "right")[0]
        b = build_windows(patient, "right")[0]
        assert np.array_equal(a.matrix, b.matrix)
        assert a.provenance == b.provenance

    def test_diagnosis_flags_populate_disease_rows(self):
        patient = patient_with_series([0.5] * 5)
        eye = patient.eyes["right"]
        d0 = eye.va_series[0].date
        eye.diagnoses.append(
            Diagnosis(d0, "feuchte AMD", {"amd_exudative": True, "dme": False},
                      {"amd_exudative": True, "dme": False})
        )
        w = build_windows(patient, "right")[0]
        assert w.matrix[ROW_INDEX["amd_exudative"], 0] == 1
        assert w.matrix[ROW_INDEX["dme"], 0] == 0
        assert w.matrix[ROW_INDEX["amd_exudative"], 1] == MISSING


def _mixed_provenance_patient():
    patient = patient_with_series([0.5] * 5)
    eye = patient.eyes["right"]
    dates = [p.date for p in eye.va_series.points]
    s1 = OctScan.stub("SC1", patient.pseudo_id, dates[0], "right", "d")
    s1.biomarkers["elm"] = BiomarkerState("pathological", "annotated")
    s2 = OctScan.stub("SC2", patient.pseudo_id, dates[1], "right", "d")
    s2.biomarkers["ped"] = BiomarkerState("physiological", "classified", 0.9)
    eye.oct_scans.extend([s1, s2])
    return patient


class TestAblate:
    def test_va_only_blanks_everything_below_va(self):
        windows = build_windows(_mixed_provenance_patient(), "right")
        out = ablate(windows, "va_only")
        for w in out:
            assert np.all(w.matrix[4:] == MISSING)
            assert np.all(w.matrix[:4] != MISSING)

    def test_drop_annotated_hits_exactly_annotated_cells(self):
        windows = build_windows(_mixed_provenance_patient(), "right")
        out = ablate(windows, "drop_annotated")
        w0, a0 = windows[0], out[0]
        diff = w0.matrix != a0.matrix
        assert diff[ROW_INDEX["elm"], 0]
        assert diff.sum() == 1
        assert a0.matrix[ROW_INDEX["ped"], 1] == 0  # classified cell untouched

    def test_drop_classified_on_annotated_only_window_is_noop(self):
        patient = patient_with_series([0.5] * 5)
        eye = patient.eyes["right"]
        scan = OctScan.stub("SC1", patient.pseudo_id, eye.va_series[0].date, "right", "d")
        scan.biomarkers["elm"] = BiomarkerState("pathological", "annotated")
        eye.oct_scans.append(scan)
        windows = build_windows(patient, "right")
        out = ablate(windows, "drop_classified")
        assert np.array_equal(out[0].matrix, windows[0].matrix)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            ablate([], "bogus")


class TestWindowIo:
    def test_jsonl_round_trip(self, tmp_path):
        corpus = Corpus()
        corpus.patients.append(_mixed_provenance_patient())
        windows = build_all_windows(corpus)
        path = tmp_path / "windows.jsonl"
        save_windows(windows, path)
        loaded = load_windows(path)
        assert len(loaded) == len(windows)
        for a, b in zip(windows, loaded):
            assert a.key() == b.key()
            assert np.array_equal(a.matrix, b.matrix)
            assert a.provenance == b.provenance
            assert a.target_va_logmar == b.target_va_logmar

    def test_serialization_is_deterministic(self, tmp_path):
        corpus = Corpus()
        corpus.patients.append(_golden_patient())
        windows = build_all_windows(corpus)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_windows(windows, p1)
        save_windows(windows, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_schema_version_checked(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"schema_version": 99}) + "\n")
        with pytest.raises(ValueError):
            load_windows(path)
