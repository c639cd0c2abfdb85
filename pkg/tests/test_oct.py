import numpy as np
import pytest

from visus.errors import BadRange, DegenerateLabels
from visus.ingest.corpus import BiomarkerState, Corpus, OctScan
from visus.ingest.pgm import write_pgm
from visus.oct import (
    LogisticSliceClassifier,
    MlpSliceClassifier,
    ScanAggregator,
    aggregate_scan,
    bilinear_resize,
    binary_f1,
    complete_documentation,
    extract_slices,
    inverse_frequency_weights,
    load_model,
    save_model,
    train_slice_classifier,
    train_two_stage,
)
from visus.oct.complete import BiomarkerModel
from visus.synth import generate_oct_dataset

from conftest import patient_with_series


def _blob_data(seed=0, n=300, d=20, margin=4.0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.25).astype(float)
    X = rng.normal(size=(n, d)) * 0.5
    X[:, 0] += margin * y
    return X, y


class TestSliceClassifiers:
    @pytest.mark.parametrize("kind", ["logreg", "mlp"])
    def test_separable_blobs_reach_high_f1(self, kind):
        X, y = _blob_data()
        clf, report = train_slice_classifier(X, y, "elm", kind=kind, seed=1)
        assert report.validation_f1 >= 0.99
        assert report.n_train + report.n_validation == len(y)

    def test_degenerate_labels_rejected(self):
        X = np.zeros((10, 4))
        with pytest.raises(DegenerateLabels):
            train_slice_classifier(X, np.ones(10), "elm", seed=0)

    @pytest.mark.parametrize("kind", ["logreg", "mlp"])
    def test_same_seed_identical_parameters(self, kind):
        X, y = _blob_data(seed=3)
        a, _ = train_slice_classifier(X, y, "ped", kind=kind, seed=7)
        b, _ = train_slice_classifier(X, y, "ped", kind=kind, seed=7)
        if kind == "logreg":
            assert np.array_equal(a.w, b.w) and a.b == b.b
        else:
            assert np.array_equal(a.net.get_params(), b.net.get_params())

    def test_confidences_in_unit_interval(self):
        X, y = _blob_data(seed=5)
        clf, _ = train_slice_classifier(X, y, "scars", kind="logreg", seed=2)
        conf = clf.confidence(X)
        assert np.all((conf >= 0) & (conf <= 1))

    def test_logreg_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        clf = LogisticSliceClassifier(l2=0.01)
        X = rng.normal(size=(12, 6))
        y = (rng.random(12) > 0.5).astype(float)
        params = rng.normal(size=7) * 0.5
        _, grad = clf.loss_and_grad(params, X, y)
        numeric = np.zeros_like(params)
        h = 1e-6
        for k in range(len(params)):
            up, down = params.copy(), params.copy()
            up[k] += h
            down[k] -= h
            numeric[k] = (clf.loss_and_grad(up, X, y)[0] - clf.loss_and_grad(down, X, y)[0]) / (2 * h)
        rel = np.abs(grad - numeric) / np.maximum(np.abs(grad) + np.abs(numeric), 1e-3)
        assert rel.max() < 1e-5

    def test_inverse_frequency_weights_balance_classes(self):
        y = np.array([1.0] + [0.0] * 9)
        w = inverse_frequency_weights(y)
        assert w[y == 1].sum() == pytest.approx(w[y == 0].sum())


class TestResize:
    def test_constant_image_stays_constant(self):
        img = np.full((37, 53), 77.0)
        for size in (8, 32, 64):
            out = bilinear_resize(img, size)
            assert out.shape == (size, size)
            assert np.allclose(out, 77.0)

    def test_identity_when_size_matches(self):
        rng = np.random.default_rng(0)
        img = rng.random((16, 16))
        assert np.array_equal(bilinear_resize(img, 16), img)

    def test_preserves_range(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 255, size=(64, 64))
        out = bilinear_resize(img, 24)
        assert out.min() >= img.min() - 1e-9
        assert out.max() <= img.max() + 1e-9


def _scan_with_files(tmp_path, name="SC1", constant=None):
    d = tmp_path / name
    d.mkdir()
    rng = np.random.default_rng(3)
    for i in range(25):
        img = (
            np.full((40, 40), constant, dtype=float)
            if constant is not None
            else rng.uniform(0, 255, size=(40, 40))
        )
        write_pgm(d / f"slice_{i:02d}.pgm", img)
    return OctScan.stub(name, "p", __import__("datetime").date(2016, 1, 1), "right", str(d))


class TestExtractSlices:
    def test_default_range_yields_11(self, tmp_path):
        scan = _scan_with_files(tmp_path)
        stack = extract_slices(scan, resolution=16)
        assert stack.shape == (11, 16, 16)
        assert stack.min() >= 0 and stack.max() <= 1

    def test_single_slice(self, tmp_path):
        scan = _scan_with_files(tmp_path)
        assert extract_slices(scan, lo=12, hi=12, resolution=8).shape == (1, 8, 8)

    def test_constant_gray_survives_resize(self, tmp_path):
        scan = _scan_with_files(tmp_path, constant=128)
        stack = extract_slices(scan, resolution=20)
        assert np.allclose(stack, 128 / 255)

    def test_bad_range(self, tmp_path):
        scan = _scan_with_files(tmp_path)
        with pytest.raises(BadRange):
            extract_slices(scan, lo=10, hi=25)


class TestAggregator:
    def _fixture(self, seed=0):
        rng = np.random.default_rng(seed)
        n = 120
        labels = (rng.random(n) < 0.3).astype(float)
        conf = np.clip(rng.normal(0.2, 0.08, size=(n, 11)) + labels[:, None] * 0.6, 0, 1)
        return conf, labels

    def test_extremes_classify_cleanly(self):
        conf, labels = self._fixture()
        agg = ScanAggregator(seed=1).fit(conf, labels)
        label_hi, c_hi = aggregate_scan(np.ones(11), agg)
        label_lo, c_lo = aggregate_scan(np.zeros(11), agg)
        assert label_hi == "pathological"
        assert label_lo == "physiological"
        assert c_hi >= 0.5 and c_lo >= 0.5

    def test_rejects_wrong_dimension(self):
        conf, labels = self._fixture()
        agg = ScanAggregator(seed=1).fit(conf, labels)
        with pytest.raises(ValueError):
            aggregate_scan(np.ones(7), agg)

    def test_rejects_out_of_range_confidence(self):
        conf, labels = self._fixture()
        agg = ScanAggregator(seed=1).fit(conf, labels)
        with pytest.raises(ValueError):
            aggregate_scan(np.full(11, 1.5), agg)


class TestTwoStage:
    def test_train_and_classify_synthetic(self):
        stacks, labels = generate_oct_dataset("elm", n_pathological=12, ratio=4.0,
                                              seed=2, resolution=16, noise=0.03)
        model = train_two_stage(stacks, labels, "elm", kind="logreg", seed=2, resolution=16)
        pred = [1 if model.classify_scan(s)[0] == "pathological" else 0 for s in stacks]
        assert binary_f1(labels, pred) >= 0.98

    def test_model_round_trip(self, tmp_path):
        stacks, labels = generate_oct_dataset("ped", n_pathological=10, ratio=3.0,
                                              seed=4, resolution=16, noise=0.03)
        model = train_two_stage(stacks, labels, "ped", kind="mlp", seed=4, resolution=16)
        path = tmp_path / "oct_ped.json"
        save_model(model, path)
        loaded = load_model(path)
        for s in stacks[:8]:
            assert loaded.classify_scan(s) == model.classify_scan(s)


class TestCompletion:
    def _corpus_with_unknowns(self, tmp_path, name="SCX"):
        patient = patient_with_series([0.5] * 5)
        eye = patient.eyes["right"]
        scan = _scan_with_files(tmp_path, name)
        for b in scan.biomarkers:
            scan.biomarkers[b] = BiomarkerState("physiological", "annotated")
        scan.biomarkers["elm"] = BiomarkerState("unknown", None)
        scan.biomarkers["ped"] = BiomarkerState("pathological", "annotated")
        eye.oct_scans.append(scan)
        corpus = Corpus()
        corpus.patients.append(patient)
        return corpus, scan

    def _model(self, biomarker, resolution=16):
        stacks, labels = generate_oct_dataset(biomarker, n_pathological=8, ratio=3.0,
                                              seed=5, resolution=resolution, noise=0.03)
        return train_two_stage(stacks, labels, biomarker, seed=5, resolution=resolution)

    def test_no_unknowns_unchanged(self, tmp_path):
        corpus, scan = self._corpus_with_unknowns(tmp_path)
        scan.biomarkers["elm"] = BiomarkerState("physiological", "annotated")
        before = {b: (st.label, st.provenance) for b, st in scan.biomarkers.items() if st.label != "unknown"}
        corpus, report = complete_documentation(corpus, {"elm": self._model("elm")})
        after = {b: (st.label, st.provenance) for b, st in scan.biomarkers.items() if b in before}
        assert before == after
        assert report.completed == 0

    def test_unknown_filled_with_classified_provenance(self, tmp_path):
        corpus, scan = self._corpus_with_unknowns(tmp_path)
        corpus, report = complete_documentation(corpus, {"elm": self._model("elm")})
        state = scan.biomarkers["elm"]
        assert state.label in ("physiological", "pathological")
        assert state.provenance == "classified"
        assert 0 <= state.confidence <= 1
        assert report.completed == 1

    def test_annotated_never_overwritten(self, tmp_path):
        corpus, scan = self._corpus_with_unknowns(tmp_path)
        corpus, _ = complete_documentation(
            corpus, {"elm": self._model("elm"), "ped": self._model("ped")}
        )
        assert scan.biomarkers["ped"].label == "pathological"
        assert scan.biomarkers["ped"].provenance == "annotated"

    def test_missing_slices_reported_and_left_unknown(self, tmp_path):
        corpus, scan = self._corpus_with_unknowns(tmp_path)
        scan.slice_dir = str(tmp_path / "nonexistent")
        corpus, report = complete_documentation(corpus, {"elm": self._model("elm")})
        assert scan.biomarkers["elm"].label == "unknown"
        assert len(report.skipped) == 1

    def test_deterministic(self, tmp_path):
        model = self._model("elm")
        results = []
        for name in ("SCA", "SCB"):
            corpus, scan = self._corpus_with_unknowns(tmp_path, name)
            complete_documentation(corpus, {"elm": model})
            results.append((scan.biomarkers["elm"].label, scan.biomarkers["elm"].confidence))
        assert results[0] == results[1]
