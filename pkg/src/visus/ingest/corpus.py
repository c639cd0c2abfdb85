"""Unified patient corpus model and its versioned JSON serialization.

The corpus is the single hand-off artifact between pipeline stages. Patients
and all per-eye event streams are kept in a canonical sort order so that
serializing the same corpus always yields identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date

from ..cohort import VaPoint, VaSeries

FORMAT_VERSION = 1

EYES = ("left", "right")

SEXES = ("male", "female", "diverse")

BIOMARKERS = (
    "elm",
    "ellipsoid",
    "foveal_depression",
    "scars",
    "ped",
    "subretinal_fibrosis",
)

LABEL_PHYSIOLOGICAL = "physiological"
LABEL_PATHOLOGICAL = "pathological"
LABEL_UNKNOWN = "unknown"

PROVENANCE_ANNOTATED = "annotated"
PROVENANCE_CLASSIFIED = "classified"

ANAMNESIS_KINDS = ("apoplexy", "blood_thinning", "myocardial_infarction")

SLICES_PER_SCAN = 25


@dataclass
class Diagnosis:
    date: date
    text: str
    flags: dict = field(default_factory=dict)      # flag name -> bool
    explicit: dict = field(default_factory=dict)   # flag name -> matched a non-wildcard rule


@dataclass
class Treatment:
    date: date
    medication: str
    source: str = "ehr"  # ehr | cis | ehr+cis


@dataclass
class BiomarkerState:
    label: str = LABEL_UNKNOWN
    provenance: str | None = None
    confidence: float | None = None


@dataclass
class OctScan:
    scan_id: str
    patient_id: str
    date: date
    eye: str
    slice_dir: str
    biomarkers: dict = field(default_factory=dict)  # biomarker -> BiomarkerState

    @classmethod
    def stub(cls, scan_id, patient_id, d, eye, slice_dir):
        return cls(
            scan_id=scan_id,
            patient_id=patient_id,
            date=d,
            eye=eye,
            slice_dir=slice_dir,
            biomarkers={b: BiomarkerState() for b in BIOMARKERS},
        )


@dataclass
class OctMeasurement:
    """Numeric OCT report values recorded in the health record."""

    date: date
    central_retinal_thickness: int | None = None
    intraretinal_fluid: int | None = None
    subretinal_fluid: int | None = None


@dataclass
class AnamnesisEvent:
    date: date
    kind: str  # one of ANAMNESIS_KINDS


@dataclass
class InvalidEvent:
    """Raw event retained from ingestion for the cleaning stage to drop."""

    date: str
    eye: str
    kind: str
    payload: str
    reason: str


@dataclass
class EyeRecord:
    va_series: VaSeries = field(default_factory=VaSeries)
    diagnoses: list = field(default_factory=list)
    treatments: list = field(default_factory=list)
    oct_scans: list = field(default_factory=list)
    measurements: list = field(default_factory=list)


@dataclass
class PatientRecord:
    pseudo_id: str
    sex: str
    birth_year: int
    eyes: dict = field(default_factory=dict)  # "left"/"right" -> EyeRecord
    anamnesis: list = field(default_factory=list)
    invalid_events: list = field(default_factory=list)

    def eye(self, side: str) -> EyeRecord:
        if side not in EYES:
            raise ValueError(f"eye side must be one of {EYES}, got {side!r}")
        if side not in self.eyes:
            self.eyes[side] = EyeRecord()
        return self.eyes[side]


@dataclass
class Corpus:
    patients: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)  # source -> event count
    warnings: list = field(default_factory=list)

    def patient(self, pseudo_id: str) -> PatientRecord | None:
        for p in self.patients:
            if p.pseudo_id == pseudo_id:
                return p
        return None


def canonicalize(corpus: Corpus) -> Corpus:
    """Sort every stream into its canonical order (idempotent, in place)."""
    corpus.patients.sort(key=lambda p: p.pseudo_id)
    for p in corpus.patients:
        p.anamnesis.sort(key=lambda a: (a.date, a.kind))
        p.invalid_events.sort(key=lambda e: (e.date, e.kind, e.eye, e.payload))
        for eye in p.eyes.values():
            eye.va_series.points.sort(key=lambda v: (v.date, v.va_decimal))
            eye.diagnoses.sort(key=lambda d: (d.date, d.text))
            eye.treatments.sort(key=lambda t: (t.date, t.medication, t.source))
            eye.oct_scans.sort(key=lambda s: (s.date, s.scan_id))
            eye.measurements.sort(key=lambda m: m.date)
    corpus.warnings.sort()
    return corpus


# -- JSON round trip -----------------------------------------------------

def _va_point_to_dict(p: VaPoint) -> dict:
    return {"date": p.date.isoformat(), "decimal": p.va_decimal, "logmar": p.va_logmar}


def _eye_to_dict(eye: EyeRecord) -> dict:
    return {
        "va": [_va_point_to_dict(p) for p in eye.va_series.points],
        "diagnoses": [
            {
                "date": d.date.isoformat(),
                "text": d.text,
                "flags": dict(sorted(d.flags.items())),
                "explicit": dict(sorted(d.explicit.items())),
            }
            for d in eye.diagnoses
        ],
        "treatments": [
            {"date": t.date.isoformat(), "medication": t.medication, "source": t.source}
            for t in eye.treatments
        ],
        "oct_scans": [
            {
                "scan_id": s.scan_id,
                "date": s.date.isoformat(),
                "eye": s.eye,
                "slice_dir": s.slice_dir,
                "biomarkers": {
                    b: {
                        "label": st.label,
                        "provenance": st.provenance,
                        "confidence": st.confidence,
                    }
                    for b, st in sorted(s.biomarkers.items())
                },
            }
            for s in eye.oct_scans
        ],
        "measurements": [
            {
                "date": m.date.isoformat(),
                "crt": m.central_retinal_thickness,
                "irf": m.intraretinal_fluid,
                "srf": m.subretinal_fluid,
            }
            for m in eye.measurements
        ],
    }


def corpus_to_dict(corpus: Corpus) -> dict:
    canonicalize(corpus)
    return {
        "format_version": FORMAT_VERSION,
        "provenance": dict(sorted(corpus.provenance.items())),
        "warnings": list(corpus.warnings),
        "patients": [
            {
                "pseudo_id": p.pseudo_id,
                "sex": p.sex,
                "birth_year": p.birth_year,
                "anamnesis": [
                    {"date": a.date.isoformat(), "kind": a.kind} for a in p.anamnesis
                ],
                "invalid_events": [
                    {
                        "date": e.date,
                        "eye": e.eye,
                        "kind": e.kind,
                        "payload": e.payload,
                        "reason": e.reason,
                    }
                    for e in p.invalid_events
                ],
                "eyes": {side: _eye_to_dict(eye) for side, eye in sorted(p.eyes.items())},
            }
            for p in corpus.patients
        ],
    }


def corpus_to_json(corpus: Corpus) -> str:
    return json.dumps(corpus_to_dict(corpus), sort_keys=True, indent=1)


def _eye_from_dict(d: dict) -> EyeRecord:
    eye = EyeRecord()
    eye.va_series = VaSeries(
        [
            VaPoint(date.fromisoformat(v["date"]), v["decimal"], v["logmar"])
            for v in d["va"]
        ]
    )
    eye.diagnoses = [
        Diagnosis(
            date.fromisoformat(x["date"]),
            x["text"],
            dict(x.get("flags", {})),
            dict(x.get("explicit", {})),
        )
        for x in d["diagnoses"]
    ]
    eye.treatments = [
        Treatment(date.fromisoformat(x["date"]), x["medication"], x["source"])
        for x in d["treatments"]
    ]
    eye.oct_scans = [
        OctScan(
            scan_id=x["scan_id"],
            patient_id="",
            date=date.fromisoformat(x["date"]),
            eye=x["eye"],
            slice_dir=x["slice_dir"],
            biomarkers={
                b: BiomarkerState(st["label"], st["provenance"], st["confidence"])
                for b, st in x["biomarkers"].items()
            },
        )
        for x in d["oct_scans"]
    ]
    eye.measurements = [
        OctMeasurement(date.fromisoformat(x["date"]), x["crt"], x["irf"], x["srf"])
        for x in d["measurements"]
    ]
    return eye


def corpus_from_dict(data: dict) -> Corpus:
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported corpus format version {data.get('format_version')!r}")
    corpus = Corpus(provenance=dict(data["provenance"]), warnings=list(data["warnings"]))
    for pd in data["patients"]:
        patient = PatientRecord(
            pseudo_id=pd["pseudo_id"],
            sex=pd["sex"],
            birth_year=pd["birth_year"],
            anamnesis=[
                AnamnesisEvent(date.fromisoformat(a["date"]), a["kind"])
                for a in pd["anamnesis"]
            ],
            invalid_events=[
                InvalidEvent(e["date"], e["eye"], e["kind"], e["payload"], e["reason"])
                for e in pd["invalid_events"]
            ],
            eyes={side: _eye_from_dict(ed) for side, ed in pd["eyes"].items()},
        )
        for eye in patient.eyes.values():
            for scan in eye.oct_scans:
                scan.patient_id = patient.pseudo_id
        corpus.patients.append(patient)
    return canonicalize(corpus)


def corpus_from_json(text: str) -> Corpus:
    return corpus_from_dict(json.loads(text))


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return corpus_from_json(fh.read())


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(corpus_to_json(corpus))
        fh.write("\n")
