"""Corpus cleaning: drop invalid entries, reporting every removal.

Cleaning never fails and never adds events; running it twice yields the
same corpus and an empty second report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..cohort import VA_DECIMAL_MAX, VA_DECIMAL_MIN
from .corpus import Corpus, canonicalize

PLACEHOLDERS = ("", "-")


@dataclass
class CleaningReport:
    entries: list = field(default_factory=list)

    def add(self, pseudo_id: str, kind: str, detail: str) -> None:
        self.entries.append({"patient": pseudo_id, "kind": kind, "detail": detail})

    @property
    def counts(self) -> dict:
        out: dict = {}
        for e in self.entries:
            out[e["kind"]] = out.get(e["kind"], 0) + 1
        return out

    def to_dict(self) -> dict:
        return {"entries": self.entries, "counts": dict(sorted(self.counts.items()))}


def clean(corpus: Corpus):
    """Return (corpus, CleaningReport); the input corpus is modified in place."""
    report = CleaningReport()
    for patient in corpus.patients:
        for ev in patient.invalid_events:
            report.add(
                patient.pseudo_id,
                "invalid_eye_side" if ev.reason == "invalid eye side" else "invalid_event",
                f"{ev.kind} on {ev.date} (eye={ev.eye!r}): {ev.reason}",
            )
        patient.invalid_events = []

        for side, eye in sorted(patient.eyes.items()):
            kept = []
            for p in eye.va_series.points:
                in_range = (
                    VA_DECIMAL_MIN <= p.va_decimal <= VA_DECIMAL_MAX
                    and p.va_logmar is not None
                    and math.isfinite(p.va_logmar)
                )
                if in_range:
                    kept.append(p)
                else:
                    report.add(
                        patient.pseudo_id,
                        "va_out_of_range",
                        f"{side} {p.date.isoformat()}: VA {p.va_decimal}",
                    )
            eye.va_series.points = kept

            kept_diag = []
            for d in eye.diagnoses:
                if d.text.strip() in PLACEHOLDERS:
                    report.add(
                        patient.pseudo_id,
                        "placeholder_text",
                        f"{side} {d.date.isoformat()}: diagnosis {d.text!r}",
                    )
                else:
                    kept_diag.append(d)
            eye.diagnoses = kept_diag

            kept_treat = []
            for t in eye.treatments:
                if t.medication.strip() in PLACEHOLDERS:
                    report.add(
                        patient.pseudo_id,
                        "placeholder_text",
                        f"{side} {t.date.isoformat()}: treatment {t.medication!r}",
                    )
                else:
                    kept_treat.append(t)
            eye.treatments = kept_treat
    return canonicalize(corpus), report
