"""Therapy-progression mathematics and predictive statistics.

Visual acuity is handled on two scales: the decimal chart scale in
[0.04, 2.0] and its logMAR transform ``-log10(decimal)`` in roughly
[-0.301, 1.398]. Lower logMAR means better vision. A change of more than
0.1 logMAR between examinations moves an eye out of the "stabilizer" band:
improvements beyond it are "winners", deteriorations "losers".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from .errors import IndexOutOfRange, NegativeSpan, OutOfRange

VA_DECIMAL_MIN = 0.04
VA_DECIMAL_MAX = 2.0

WSL_THRESHOLD = 0.1

DAYS_PER_YEAR = 365.25

TIME_WINDOW_BUCKETS = ("<1", "1-3", "3-6", ">6")


class WslLabel(Enum):
    """Therapy response classes, ordered Winner < Stabilizer < Loser.

    The order is the deterministic tie-break used wherever a single label
    must be chosen among equals.
    """

    WINNER = "Winner"
    STABILIZER = "Stabilizer"
    LOSER = "Loser"

    @property
    def rank(self) -> int:
        return _WSL_RANK[self]

    def __lt__(self, other: "WslLabel") -> bool:
        return self.rank < other.rank


_WSL_RANK = {WslLabel.WINNER: 0, WslLabel.STABILIZER: 1, WslLabel.LOSER: 2}


def to_logmar(va_decimal: float) -> float:
    """Convert decimal visual acuity to logMAR.

    Raises OutOfRange for values outside the supported decimal chart range.
    """
    if not (VA_DECIMAL_MIN <= va_decimal <= VA_DECIMAL_MAX):
        raise OutOfRange(
            f"decimal VA {va_decimal!r} outside [{VA_DECIMAL_MIN}, {VA_DECIMAL_MAX}]"
        )
    return -math.log10(va_decimal)


def to_decimal(va_logmar: float) -> float:
    """Inverse of to_logmar (no clamping)."""
    return 10.0 ** (-va_logmar)


@dataclass(frozen=True)
class VaPoint:
    date: date
    va_decimal: float
    va_logmar: float


@dataclass
class VaSeries:
    """Chronological visual-acuity measurements for one eye."""

    points: list[VaPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> VaPoint:
        return self.points[i]

    @classmethod
    def from_decimal(cls, entries: list[tuple[date, float]]) -> "VaSeries":
        return cls([VaPoint(d, v, to_logmar(v)) for d, v in entries])

    @classmethod
    def from_logmar(cls, entries: list[tuple[date, float]]) -> "VaSeries":
        return cls([VaPoint(d, to_decimal(lm), lm) for d, lm in entries])

    def logmar_values(self) -> list[float]:
        return [p.va_logmar for p in self.points]

    def decimal_values(self) -> list[float]:
        return [p.va_decimal for p in self.points]


def delta_va(series: VaSeries, i: int) -> float:
    """logMAR change from examination i-1 to examination i."""
    if i < 1 or i >= len(series):
        raise IndexOutOfRange(f"index {i} needs 1 <= i < {len(series)}")
    return series[i].va_logmar - series[i - 1].va_logmar


def classify_delta(delta: float) -> WslLabel:
    """Classify a logMAR change; both band boundaries count as stabilizer."""
    if delta < -WSL_THRESHOLD:
        return WslLabel.WINNER
    if delta > WSL_THRESHOLD:
        return WslLabel.LOSER
    return WslLabel.STABILIZER


def classify_global(series: VaSeries) -> WslLabel:
    """Classify an eye by its first and last measurement only."""
    if len(series) < 2:
        raise IndexOutOfRange("global classification needs at least 2 measurements")
    return classify_delta(series[-1].va_logmar - series[0].va_logmar)


def time_window_bucket(first_date: date, last_date: date) -> str:
    """Observation-span bucket: [0,1) / [1,3) / [3,6) / [6,inf) years."""
    days = (last_date - first_date).days
    if days < 0:
        raise NegativeSpan(f"{last_date} before {first_date}")
    years = days / DAYS_PER_YEAR
    if years < 1.0:
        return "<1"
    if years < 3.0:
        return "1-3"
    if years < 6.0:
        return "3-6"
    return ">6"


@dataclass
class BucketStats:
    eye_count: int = 0
    patient_ids: set = field(default_factory=set)
    counts: dict = field(default_factory=lambda: {lbl: 0 for lbl in WslLabel})

    def frequencies(self) -> dict:
        if self.eye_count == 0:
            return {lbl: 0.0 for lbl in WslLabel}
        return {lbl: c / self.eye_count for lbl, c in self.counts.items()}


@dataclass
class WslDistribution:
    """Per time-window-bucket winner/stabilizer/loser frequencies."""

    buckets: dict  # bucket name -> BucketStats

    def to_dict(self) -> dict:
        out = {}
        for name in TIME_WINDOW_BUCKETS:
            st = self.buckets[name]
            freqs = st.frequencies()
            out[name] = {
                "eyes": st.eye_count,
                "patients": len(st.patient_ids),
                "winner": freqs[WslLabel.WINNER],
                "stabilizer": freqs[WslLabel.STABILIZER],
                "loser": freqs[WslLabel.LOSER],
            }
        return out


def wsl_distribution(corpus, disease_filter=None, comorbidity_filter=None) -> WslDistribution:
    """Bucketed WSL frequencies over all qualifying eyes of a corpus.

    An eye qualifies when it has at least two VA measurements and, if
    filters are given, at least one diagnosis event resolves each filtered
    flag to True. Each qualifying eye lands in exactly one bucket, chosen
    by the span between its first and last measurement.
    """
    buckets = {name: BucketStats() for name in TIME_WINDOW_BUCKETS}
    required = [f for f in (disease_filter, comorbidity_filter) if f]
    for patient in corpus.patients:
        for eye_side, eye in sorted(patient.eyes.items()):
            series = eye.va_series
            if len(series) < 2:
                continue
            if required and not all(_eye_has_flag(eye, flag) for flag in required):
                continue
            bucket = time_window_bucket(series[0].date, series[-1].date)
            label = classify_global(series)
            st = buckets[bucket]
            st.eye_count += 1
            st.patient_ids.add(patient.pseudo_id)
            st.counts[label] += 1
    return WslDistribution(buckets)


def _eye_has_flag(eye, flag: str) -> bool:
    for diag in eye.diagnoses:
        if diag.flags.get(flag) is True:
            return True
    return False
