"""Record-format ingestion and patient-based data fusion."""

from __future__ import annotations

import os

from .clean import CleaningReport, clean
from .corpus import (
    BIOMARKERS,
    Corpus,
    EyeRecord,
    OctScan,
    PatientRecord,
    corpus_from_json,
    corpus_to_json,
    load_corpus,
    save_corpus,
)
from .ivom import IvomEvent, parse_ivom_csv
from .merge import merge_patients, pseudonymize_patients
from .octmanifest import load_oct_manifest
from .pseudonym import pseudonymize
from .xdt import XdtRecord, extract_patient, parse_xdt, serialize_xdt

__all__ = [
    "BIOMARKERS",
    "CleaningReport",
    "Corpus",
    "EyeRecord",
    "IvomEvent",
    "OctScan",
    "PatientRecord",
    "XdtRecord",
    "build_corpus",
    "clean",
    "corpus_from_json",
    "corpus_to_json",
    "extract_patient",
    "load_corpus",
    "load_oct_manifest",
    "merge_patients",
    "parse_ivom_csv",
    "parse_xdt",
    "pseudonymize",
    "pseudonymize_patients",
    "save_corpus",
    "serialize_xdt",
]


def build_corpus(ehr_dir: str, ivom_csv: str, oct_manifest: str, salt: str):
    """Full ingestion: parse all three sources, pseudonymize, merge, clean.

    Returns (corpus, cleaning_report). Parser warnings and row rejections
    are folded into the corpus warning list.
    """
    raw_patients = []
    extra_warnings = []
    for name in sorted(os.listdir(ehr_dir)):
        if not name.endswith(".xdt"):
            continue
        with open(os.path.join(ehr_dir, name), "rb") as fh:
            groups, warnings = parse_xdt(fh.read())
        extra_warnings.extend(f"{name}: {w}" for w in warnings)
        raw_patients.extend(extract_patient(g) for g in groups)
    pseudonymize_patients(raw_patients, salt)

    with open(ivom_csv, "rb") as fh:
        events, rejects = parse_ivom_csv(fh.read())
    extra_warnings.extend(f"ivom: {r}" for r in rejects)
    events = [
        IvomEvent(pseudonymize(e.patient_id, salt), e.date, e.eye, e.medication)
        for e in events
    ]

    scans = load_oct_manifest(oct_manifest)
    for scan in scans:
        scan.patient_id = pseudonymize(scan.patient_id, salt)

    corpus = merge_patients(raw_patients, events, scans)
    corpus.warnings.extend(extra_warnings)
    return clean(corpus)
