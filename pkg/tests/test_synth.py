import filecmp
import json
import os

import numpy as np
import pytest

from visus.cohort import WslLabel, classify_global
from visus.errors import InvalidConfig
from visus.ingest import build_corpus
from visus.ingest.pseudonym import pseudonymize
from visus.synth import (
    CHART_DECIMALS,
    SynthConfig,
    generate_corpus,
    generate_oct_dataset,
    generate_patients,
    snap_to_chart,
)


class TestConfig:
    def test_bad_mix_rejected(self):
        with pytest.raises(InvalidConfig):
            SynthConfig(disease_mix={"dme": 0.5}).validate()

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidConfig):
            SynthConfig(va_noise=-0.1).validate()


class TestTrajectories:
    def test_noiseless_global_labels_match_intent(self):
        config = SynthConfig(
            seed=3, patients=120, va_noise=0.0, oct_rate=0.0, ivom_rate=0.0, crt_rate=0.0
        )
        for patient in generate_patients(config):
            for eye in patient.eyes.values():
                decimals = [CHART_DECIMALS[s] for s in eye.observed]
                from visus.cohort import VaSeries

                series = VaSeries.from_decimal(list(zip(eye.exam_dates, decimals)))
                assert classify_global(series).value.lower() == eye.global_label

    def test_pure_winner_mix(self):
        config = SynthConfig(
            seed=5, patients=40, va_noise=0.0,
            wsl_mix={"winner": 1.0, "stabilizer": 0.0, "loser": 0.0},
            oct_rate=0.0, ivom_rate=0.0, crt_rate=0.0,
        )
        for patient in generate_patients(config):
            for eye in patient.eyes.values():
                assert eye.global_label == "winner"

    def test_mix_frequencies_close_to_target(self):
        config = SynthConfig(
            seed=11, patients=1200, va_noise=0.0,
            wsl_mix={"winner": 0.3, "stabilizer": 0.5, "loser": 0.2},
            oct_rate=0.0, ivom_rate=0.0, crt_rate=0.0, min_exams=2, max_exams=4,
        )
        counts = {"winner": 0, "stabilizer": 0, "loser": 0}
        total = 0
        for patient in generate_patients(config):
            for eye in patient.eyes.values():
                counts[eye.global_label] += 1
                total += 1
        assert total >= 2000
        assert counts["winner"] / total == pytest.approx(0.3, abs=0.03)
        assert counts["stabilizer"] / total == pytest.approx(0.5, abs=0.03)
        assert counts["loser"] / total == pytest.approx(0.2, abs=0.03)

    def test_snap_to_chart_is_nearest(self):
        for k, lm in enumerate(np.linspace(-0.3, 1.39, 40)):
            idx = snap_to_chart(float(lm))
            diffs = [abs(lm - g) for g in map(lambda d: -np.log10(d), CHART_DECIMALS)]
            assert diffs[idx] == min(diffs)


class TestFileEmission:
    def _generate(self, tmp_path, name, **kwargs):
        out = tmp_path / name
        config = SynthConfig(seed=7, patients=8, **kwargs)
        truth = generate_corpus(config, str(out))
        return out, truth

    def test_seed_determinism_byte_identical(self, tmp_path):
        a, _ = self._generate(tmp_path, "a", oct_rate=0.5, oct_missing_rate=0.3)
        b, _ = self._generate(tmp_path, "b", oct_rate=0.5, oct_missing_rate=0.3)
        comparison = filecmp.dircmp(a, b)

        def assert_same(dc):
            assert dc.diff_files == []
            assert dc.left_only == [] and dc.right_only == []
            for sub in dc.subdirs.values():
                assert_same(sub)

        assert_same(comparison)

    def test_round_trip_loses_zero_events(self, tmp_path):
        out, truth = self._generate(tmp_path, "c", oct_rate=0.4)
        corpus, report = build_corpus(
            str(out / "ehr"), str(out / "ivom.csv"), str(out / "oct" / "manifest.csv"),
            "salt123",
        )
        assert report.entries == []
        # every generated VA measurement survives
        expected = sum(
            len(eye["va_decimal"])
            for p in truth["patients"].values()
            for eye in p["eyes"].values()
        )
        got = sum(
            len(eye.va_series)
            for p in corpus.patients
            for eye in p.eyes.values()
        )
        assert got == expected

    def test_sidecar_matches_pipeline_labels_when_noiseless(self, tmp_path):
        out, truth = self._generate(tmp_path, "d", va_noise=0.0, oct_rate=0.0)
        corpus, _ = build_corpus(
            str(out / "ehr"), str(out / "ivom.csv"), str(out / "oct" / "manifest.csv"),
            "pepper9",
        )
        for raw_id, p in truth["patients"].items():
            pseudo = pseudonymize(raw_id, "pepper9")
            patient = corpus.patient(pseudo)
            assert patient is not None
            for side, eye in p["eyes"].items():
                series = patient.eyes[side].va_series
                assert [pt.va_decimal for pt in series.points] == eye["va_decimal"]
                assert classify_global(series).value == eye["global_label"].capitalize() \
                    or classify_global(series).value == eye["global_label"]

    def test_dedup_union_of_sources(self, tmp_path):
        out, truth = self._generate(tmp_path, "e", ivom_rate=0.9, ivom_ehr_echo=0.7)
        corpus, _ = build_corpus(
            str(out / "ehr"), str(out / "ivom.csv"), str(out / "oct" / "manifest.csv"),
            "s",
        )
        with open(out / "ivom.csv") as fh:
            csv_rows = len(fh.readlines()) - 1
        stored = sum(
            len(eye.treatments) for p in corpus.patients for eye in p.eyes.values()
        )
        assert stored == csv_rows  # every EHR echo collapsed onto its CSV row
        sources = {
            t.source
            for p in corpus.patients
            for eye in p.eyes.values()
            for t in eye.treatments
        }
        assert "cis+ehr" in sources and "cis" in sources

    def test_shared_slice_dir_mode(self, tmp_path):
        out, _ = self._generate(tmp_path, "f", oct_rate=0.6, shared_slice_dir=True)
        scan_dirs = os.listdir(out / "oct" / "scans")
        assert scan_dirs == ["shared"]
        corpus, _ = build_corpus(
            str(out / "ehr"), str(out / "ivom.csv"), str(out / "oct" / "manifest.csv"),
            "s",
        )
        assert any(eye.oct_scans for p in corpus.patients for eye in p.eyes.values())


class TestOctDataset:
    def test_imbalance_ratio_exact_counts(self):
        stacks, labels = generate_oct_dataset("elm", n_pathological=50, ratio=18.8,
                                              seed=1, resolution=8, noise=0.0)
        n_path = int(labels.sum())
        n_phys = len(labels) - n_path
        assert n_path == 50
        assert abs(n_phys - round(18.8 * n_path)) <= 1

    def test_noiseless_classes_linearly_separable(self):
        stacks, labels = generate_oct_dataset("ped", n_pathological=10, ratio=2.0,
                                              seed=2, resolution=16, noise=0.0)
        # the pathological band rows are strictly brighter in every sick scan
        from visus.synth import band_rows

        r0, r1 = band_rows("ped", 16)
        band_mean = stacks[:, :, r0:r1, :].mean(axis=(1, 2, 3))
        sick = band_mean[labels == 1].min()
        healthy = band_mean[labels == 0].max()
        assert sick > healthy

    def test_determinism(self):
        a, la = generate_oct_dataset("elm", 5, 3.0, seed=9, resolution=8)
        b, lb = generate_oct_dataset("elm", 5, 3.0, seed=9, resolution=8)
        assert np.array_equal(a, b) and np.array_equal(la, lb)

    def test_bad_arguments(self):
        with pytest.raises(InvalidConfig):
            generate_oct_dataset("bogus", 5, 3.0)
        with pytest.raises(InvalidConfig):
            generate_oct_dataset("elm", 0, 3.0)
