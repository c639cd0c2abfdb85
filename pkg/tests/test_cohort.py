import math
from datetime import date, timedelta

import pytest
from hypothesis import given, strategies as st

from visus.cohort import (
    VaSeries,
    WslLabel,
    classify_delta,
    classify_global,
    delta_va,
    time_window_bucket,
    to_decimal,
    to_logmar,
    wsl_distribution,
)
from visus.errors import IndexOutOfRange, NegativeSpan, OutOfRange
from visus.ingest.corpus import Corpus, Diagnosis

from conftest import REFERENCE_SERIES_LOGMAR, patient_with_series, series_from_logmar


class TestToLogmar:
    def test_unit_va_is_zero(self):
        assert to_logmar(1.0) == 0.0

    def test_lower_bound(self):
        assert to_logmar(0.04) == pytest.approx(1.39794, abs=1e-5)

    def test_upper_bound(self):
        assert to_logmar(2.0) == pytest.approx(-0.30103, abs=1e-5)

    def test_half(self):
        # hand value: -log10(0.5)
        assert to_logmar(0.5) == pytest.approx(0.30103, abs=1e-5)

    @pytest.mark.parametrize("bad", [0.039, 0.0, -1.0, 2.01, 100.0])
    def test_out_of_range(self, bad):
        with pytest.raises(OutOfRange):
            to_logmar(bad)

    @given(st.floats(min_value=0.04, max_value=2.0))
    def test_strictly_decreasing(self, v):
        if v < 2.0:
            assert to_logmar(v) > to_logmar(min(2.0, v * 1.01 + 1e-9))

    @given(st.floats(min_value=0.5, max_value=2.0))
    def test_reciprocal_antisymmetry(self, v):
        assert to_logmar(1.0 / v) == pytest.approx(-to_logmar(v), abs=1e-12)

    @given(st.floats(min_value=0.04, max_value=2.0))
    def test_round_trip(self, v):
        assert to_decimal(to_logmar(v)) == pytest.approx(v, rel=1e-12)


class TestDeltaVa:
    def test_constant_series_zero_everywhere(self):
        series = series_from_logmar([0.4] * 6)
        for i in range(1, 6):
            assert delta_va(series, i) == 0.0

    def test_reference_series_known_changes(self):
        series = series_from_logmar(REFERENCE_SERIES_LOGMAR)
        assert delta_va(series, 4) == pytest.approx(0.3)
        assert delta_va(series, 5) == pytest.approx(-0.3)

    @pytest.mark.parametrize("i", [0, -1, 19, 100])
    def test_index_out_of_range(self, i):
        series = series_from_logmar(REFERENCE_SERIES_LOGMAR)
        with pytest.raises(IndexOutOfRange):
            delta_va(series, i)


class TestClassifyDelta:
    @pytest.mark.parametrize(
        "delta,expected",
        [
            (-0.3, WslLabel.WINNER),
            (-0.10001, WslLabel.WINNER),
            (-0.1, WslLabel.STABILIZER),
            (0.0, WslLabel.STABILIZER),
            (0.1, WslLabel.STABILIZER),
            (0.10001, WslLabel.LOSER),
            (0.3, WslLabel.LOSER),
        ],
    )
    def test_threshold_table(self, delta, expected):
        assert classify_delta(delta) == expected

    @given(st.floats(min_value=0.1000001, max_value=5))
    def test_antisymmetry_outside_band(self, d):
        assert classify_delta(d) == WslLabel.LOSER
        assert classify_delta(-d) == WslLabel.WINNER

    @given(st.floats(min_value=-5, max_value=5))
    def test_matches_three_branch_oracle(self, d):
        if d < -0.1:
            expected = WslLabel.WINNER
        elif d > 0.1:
            expected = WslLabel.LOSER
        else:
            expected = WslLabel.STABILIZER
        assert classify_delta(d) == expected


class TestClassifyGlobal:
    def test_flat_series_is_stabilizer(self):
        series = VaSeries.from_decimal(
            [(date(2015, 1, 1), 0.5), (date(2016, 1, 1), 0.5)]
        )
        assert classify_global(series) == WslLabel.STABILIZER

    def test_halving_acuity_is_loser(self):
        # logMAR rises by ~0.301
        series = VaSeries.from_decimal(
            [(date(2015, 1, 1), 1.0), (date(2016, 1, 1), 0.5)]
        )
        assert classify_global(series) == WslLabel.LOSER

    def test_doubling_acuity_is_winner(self):
        series = VaSeries.from_decimal(
            [(date(2015, 1, 1), 0.5), (date(2016, 1, 1), 1.0)]
        )
        assert classify_global(series) == WslLabel.WINNER

    def test_endpoint_only(self):
        base = [0.5, 0.5]
        with_detour = [0.5, 1.0, 0.2, 0.9, 0.5]
        a = series_from_logmar(base)
        b = series_from_logmar(with_detour)
        assert classify_global(a) == classify_global(b)

    def test_too_short(self):
        with pytest.raises(IndexOutOfRange):
            classify_global(series_from_logmar([0.5]))


class TestTimeWindowBucket:
    @pytest.mark.parametrize(
        "days,expected",
        [
            (0, "<1"), (180, "<1"), (364, "<1"),
            (366, "1-3"), (2 * 365, "1-3"),
            (1096, "3-6"), (5 * 365, "3-6"),
            (2192, ">6"), (7 * 365, ">6"),
        ],
    )
    def test_buckets(self, days, expected):
        first = date(2010, 1, 1)
        assert time_window_bucket(first, first + timedelta(days=days)) == expected

    def test_exactly_three_years(self):
        # 3.0 years falls in the half-open [3, 6) bucket
        first = date(2010, 1, 1)
        last = first + timedelta(days=round(3 * 365.25))
        assert time_window_bucket(first, last) == "3-6"

    def test_negative_span(self):
        with pytest.raises(NegativeSpan):
            time_window_bucket(date(2016, 1, 1), date(2015, 1, 1))


def _flagged(patient, eye, flag):
    rec = patient.eyes[eye]
    first = rec.va_series[0].date
    rec.diagnoses.append(Diagnosis(first, flag, {flag: True}, {flag: True}))


class TestWslDistribution:
    def test_all_stabilizers(self):
        corpus = Corpus()
        for k in range(6):
            patient = patient_with_series([0.5] * 5, pseudo_id=f"p{k:016x}"[:16])
            _flagged(patient, "right", "dme")
            corpus.patients.append(patient)
        dist = wsl_distribution(corpus, "dme")
        for name, stats in dist.buckets.items():
            if stats.eye_count:
                assert stats.frequencies()[WslLabel.STABILIZER] == 1.0

    def test_empty_filter_result(self):
        corpus = Corpus()
        corpus.patients.append(patient_with_series([0.5] * 5))
        dist = wsl_distribution(corpus, "rvo")
        assert all(s.eye_count == 0 for s in dist.buckets.values())
        payload = dist.to_dict()
        assert all(row["eyes"] == 0 for row in payload.values())

    def test_matches_brute_force_on_seeded_fixture(self):
        import numpy as np

        rng = np.random.default_rng(20)
        corpus = Corpus()
        expected = {}
        for k in range(20):
            lm = [round(float(rng.uniform(0.0, 1.0)), 2) for _ in range(2 + int(rng.integers(0, 4)))]
            gap = int(rng.integers(100, 1200))
            patient = patient_with_series(lm, pseudo_id=f"{k:016x}", eye="left")
            patient.eyes["left"].va_series = VaSeries.from_logmar(
                [
                    (date(2012, 1, 1) + timedelta(days=gap * i), v)
                    for i, v in enumerate(lm)
                ]
            )
            _flagged(patient, "left", "amd_exudative")
            corpus.patients.append(patient)
            # independent brute-force bucketing of the same fixture
            series = patient.eyes["left"].va_series
            total_days = (series[-1].date - series[0].date).days
            years = total_days / 365.25
            bucket = "<1" if years < 1 else "1-3" if years < 3 else "3-6" if years < 6 else ">6"
            d = series[-1].va_logmar - series[0].va_logmar
            label = "W" if d < -0.1 else "L" if d > 0.1 else "S"
            expected.setdefault(bucket, []).append(label)
        dist = wsl_distribution(corpus, "amd_exudative")
        for bucket, labels in expected.items():
            stats = dist.buckets[bucket]
            assert stats.eye_count == len(labels)
            freqs = stats.frequencies()
            assert freqs[WslLabel.WINNER] == pytest.approx(labels.count("W") / len(labels))
            assert freqs[WslLabel.STABILIZER] == pytest.approx(labels.count("S") / len(labels))
            assert freqs[WslLabel.LOSER] == pytest.approx(labels.count("L") / len(labels))

    def test_frequencies_sum_to_one_and_eyes_partition(self):
        import numpy as np

        rng = np.random.default_rng(4)
        corpus = Corpus()
        n_eyes = 0
        for k in range(15):
            lm = [round(float(rng.uniform(0.0, 1.2)), 2) for _ in range(3)]
            gap = int(rng.integers(30, 1500))
            patient = patient_with_series([0.5], pseudo_id=f"{k + 100:016x}")
            patient.eyes["right"].va_series = VaSeries.from_logmar(
                [
                    (date(2013, 1, 1) + timedelta(days=gap * i), v)
                    for i, v in enumerate(lm)
                ]
            )
            _flagged(patient, "right", "dme")
            corpus.patients.append(patient)
            n_eyes += 1
        dist = wsl_distribution(corpus, "dme")
        assert sum(s.eye_count for s in dist.buckets.values()) == n_eyes
        for stats in dist.buckets.values():
            if stats.eye_count:
                assert math.isclose(sum(stats.frequencies().values()), 1.0, abs_tol=1e-9)
