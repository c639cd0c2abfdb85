"""Patient-based merging of the three record sources into one corpus.

All inputs must already be pseudonymized with the same salt. Merging is a
pure fold: events are attached to the matching patient and eye, duplicate
injection events are collapsed on (patient, date, eye, medication), and
every stream ends up chronologically sorted. Events that reference no
known patient are collected as orphan warnings, never failures.
"""

from __future__ import annotations

import math
from collections import defaultdict

from ..cohort import VA_DECIMAL_MAX, VA_DECIMAL_MIN, VaPoint
from .corpus import (
    AnamnesisEvent,
    Corpus,
    Diagnosis,
    EYES,
    InvalidEvent,
    OctMeasurement,
    PatientRecord,
    Treatment,
    canonicalize,
)
from .ivom import MEDICATIONS
from .pseudonym import pseudonymize

ANAMNESIS_KEYWORDS = {
    "apoplex": "apoplexy",
    "schlaganfall": "apoplexy",
    "blutverdünnung": "blood_thinning",
    "blutverduennung": "blood_thinning",
    "marcumar": "blood_thinning",
    "antikoagulation": "blood_thinning",
    "herzinfarkt": "myocardial_infarction",
    "myokardinfarkt": "myocardial_infarction",
}


def _safe_logmar(decimal: float) -> float:
    if VA_DECIMAL_MIN <= decimal <= VA_DECIMAL_MAX:
        return -math.log10(decimal)
    return math.nan


def pseudonymize_patients(raw_patients, salt: str):
    """Replace every raw EHR identifier in place; returns the same list."""
    for p in raw_patients:
        p.raw_id = pseudonymize(p.raw_id, salt)
    return raw_patients


def merge_patients(ehr_patients, ivom_events, oct_scans) -> Corpus:
    corpus = Corpus()
    by_id: dict[str, PatientRecord] = {}
    ehr_event_count = 0

    for raw in sorted(ehr_patients, key=lambda p: p.raw_id):
        patient = PatientRecord(
            pseudo_id=raw.raw_id, sex=raw.sex, birth_year=raw.birth_year
        )
        by_id[patient.pseudo_id] = patient
        corpus.patients.append(patient)
        measurements: dict = defaultdict(dict)  # (eye, date) -> field -> value
        for ev in raw.events:
            ehr_event_count += 1
            if ev.kind == "anamnesis":
                kind = _map_anamnesis(ev.payload)
                if kind is None:
                    corpus.warnings.append(
                        f"patient {patient.pseudo_id}: unmapped anamnesis {ev.payload!r}"
                    )
                else:
                    patient.anamnesis.append(AnamnesisEvent(ev.date, kind))
                continue
            if ev.eye not in EYES:
                patient.invalid_events.append(
                    InvalidEvent(
                        date=ev.date.isoformat(),
                        eye="" if ev.eye is None else ev.eye,
                        kind=ev.kind,
                        payload=ev.payload,
                        reason="invalid eye side",
                    )
                )
                continue
            eye = patient.eye(ev.eye)
            if ev.kind == "va_decimal":
                try:
                    value = float(ev.payload)
                except ValueError:
                    patient.invalid_events.append(
                        InvalidEvent(ev.date.isoformat(), ev.eye, ev.kind, ev.payload,
                                     "unparseable VA value")
                    )
                    continue
                eye.va_series.points.append(VaPoint(ev.date, value, _safe_logmar(value)))
            elif ev.kind == "diagnosis":
                eye.diagnoses.append(Diagnosis(ev.date, ev.payload))
            elif ev.kind == "treatment":
                medication = _canonical_medication(ev.payload)
                eye.treatments.append(Treatment(ev.date, medication, source="ehr"))
            elif ev.kind in ("central_retinal_thickness", "intraretinal_fluid", "subretinal_fluid"):
                try:
                    measurements[(ev.eye, ev.date)][ev.kind] = int(ev.payload)
                except ValueError:
                    patient.invalid_events.append(
                        InvalidEvent(ev.date.isoformat(), ev.eye, ev.kind, ev.payload,
                                     "unparseable measurement")
                    )
        for (side, d), fields in measurements.items():
            patient.eye(side).measurements.append(
                OctMeasurement(
                    date=d,
                    central_retinal_thickness=fields.get("central_retinal_thickness"),
                    intraretinal_fluid=fields.get("intraretinal_fluid"),
                    subretinal_fluid=fields.get("subretinal_fluid"),
                )
            )

    orphan_count = 0
    for ev in ivom_events:
        patient = by_id.get(ev.patient_id)
        if patient is None:
            orphan_count += 1
            corpus.warnings.append(f"orphan ivom event for patient {ev.patient_id}")
            continue
        patient.eye(ev.eye).treatments.append(
            Treatment(ev.date, ev.medication, source="cis")
        )

    attached_scans = 0
    for scan in oct_scans:
        patient = by_id.get(scan.patient_id)
        if patient is None:
            orphan_count += 1
            corpus.warnings.append(f"orphan oct scan {scan.scan_id} for patient {scan.patient_id}")
            continue
        if scan.eye not in EYES:
            patient.invalid_events.append(
                InvalidEvent(scan.date.isoformat(), scan.eye, "oct_scan", scan.scan_id,
                             "invalid eye side")
            )
            continue
        patient.eye(scan.eye).oct_scans.append(scan)
        attached_scans += 1

    for patient in corpus.patients:
        _dedupe_patient(patient)

    corpus.provenance = {
        "ehr_patients": len(corpus.patients),
        "ehr_events": ehr_event_count,
        "ivom_rows": len(ivom_events),
        "oct_scans": attached_scans,
        "orphan_events": orphan_count,
    }
    return canonicalize(corpus)


def _canonical_medication(text: str) -> str:
    lowered = text.strip().lower()
    for key, canonical in MEDICATIONS.items():
        if key in lowered:
            return canonical
    return text.strip()


def _map_anamnesis(text: str) -> str | None:
    lowered = text.strip().lower()
    for key, kind in ANAMNESIS_KEYWORDS.items():
        if key in lowered:
            return kind
    return None


def _dedupe_patient(patient: PatientRecord) -> None:
    """Collapse duplicates with order-insensitive canonical rules."""
    seen = set()
    deduped = []
    for a in sorted(patient.anamnesis, key=lambda x: (x.date, x.kind)):
        key = (a.date, a.kind)
        if key not in seen:
            seen.add(key)
            deduped.append(a)
    patient.anamnesis = deduped

    for eye in patient.eyes.values():
        # Same-day repeat VA measurements: keep the best (highest decimal).
        best: dict = {}
        for p in eye.va_series.points:
            cur = best.get(p.date)
            if cur is None or p.va_decimal > cur.va_decimal:
                best[p.date] = p
        eye.va_series.points = [best[d] for d in sorted(best)]

        sources: dict = defaultdict(set)
        for t in eye.treatments:
            sources[(t.date, t.medication)].add(t.source)
        eye.treatments = [
            Treatment(d, med, "+".join(sorted(srcs)))
            for (d, med), srcs in sorted(sources.items(), key=lambda kv: (kv[0][0], kv[0][1]))
        ]

        diag_seen = set()
        diags = []
        for dgn in sorted(eye.diagnoses, key=lambda x: (x.date, x.text)):
            key = (dgn.date, dgn.text)
            if key not in diag_seen:
                diag_seen.add(key)
                diags.append(dgn)
        eye.diagnoses = diags
