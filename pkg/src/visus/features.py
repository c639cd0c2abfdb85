"""Factorized feature windows for the visual-acuity predictors.

Each window is a 24-row matrix over 4 to 10 consecutive examinations of one
eye, predicting the next examination's VA. Rows, in order (1-based):

     1  days since birth (from Jan 1 of the birth year)
     2  birth year
     3  sex (male 0, female 1, diverse 2)
     4  decimal VA
     5  medication (Eylea 0, Lucentis 1)
     6- 8  anamnesis flags: apoplexy, blood thinning, myocardial infarction
     9-10  OCT biomarkers: ELM, ellipsoid zone
    11-13  OCT report values: central retinal thickness, intraretinal fluid,
           subretinal fluid
    14-17  OCT biomarkers: foveal depression, scars, PED, subretinal fibrosis
    18-24  disease flags: exudative AMD, DME, RVO, cataract, diabetic
           retinopathy, ERM, pseudophakia

``-1`` is the missing-value marker everywhere; the VA row is never missing.
Side-channel events are attached to the nearest examination at or before
their own date, so a value recorded once appears in exactly one column and
does not bleed into later examinations.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import SeriesTooShort
from .ingest.corpus import (
    BIOMARKERS,
    LABEL_PATHOLOGICAL,
    LABEL_PHYSIOLOGICAL,
    PatientRecord,
)

SCHEMA_VERSION = 1

MISSING = -1.0

MIN_WINDOW = 4
MAX_WINDOW = 10

ROW_NAMES = (
    "days_since_birth",
    "birth_year",
    "sex",
    "va_decimal",
    "medication",
    "apoplexy",
    "blood_thinning",
    "myocardial_infarction",
    "elm",
    "ellipsoid",
    "central_retinal_thickness",
    "intraretinal_fluid",
    "subretinal_fluid",
    "foveal_depression",
    "scars",
    "ped",
    "subretinal_fibrosis",
    "amd_exudative",
    "dme",
    "rvo",
    "cataract",
    "diabetic_retinopathy",
    "erm",
    "pseudophakia",
)

ROW_INDEX = {name: i for i, name in enumerate(ROW_NAMES)}

N_ROWS = len(ROW_NAMES)

BIOMARKER_ROWS = {b: ROW_INDEX[b] for b in BIOMARKERS}

VA_ROW = ROW_INDEX["va_decimal"]

SEX_CODES = {"male": 0, "female": 1, "diverse": 2}
MEDICATION_CODES = {"Eylea": 0, "Lucentis": 1}
BIOMARKER_CODES = {LABEL_PHYSIOLOGICAL: 0, LABEL_PATHOLOGICAL: 1}

ABLATION_MODES = ("drop_annotated", "drop_classified", "va_only")


def factorize(value, row_name: str) -> float:
    """Map one raw value to its numeric code; None is always -1."""
    if value is None:
        return MISSING
    if row_name == "sex":
        return float(SEX_CODES.get(value, MISSING))
    if row_name == "medication":
        return float(MEDICATION_CODES.get(value, MISSING))
    if row_name in BIOMARKER_ROWS:
        return float(BIOMARKER_CODES.get(value, MISSING))
    if row_name in ("amd_exudative", "dme", "rvo", "cataract",
                    "diabetic_retinopathy", "erm", "pseudophakia",
                    "apoplexy", "blood_thinning", "myocardial_infarction"):
        return 1.0 if value else 0.0
    return float(value)


@dataclass
class FeatureWindow:
    pseudo_id: str
    eye: str
    target_index: int          # examination index being predicted (0-based)
    matrix: np.ndarray         # (24, w) float64
    provenance: list           # per biomarker row name -> list of w entries
    target_date: date
    target_va_decimal: float
    target_va_logmar: float
    column_indices: list = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    @property
    def prev_va_decimal(self) -> float:
        return float(self.matrix[VA_ROW, -1])

    def key(self) -> tuple:
        return (self.pseudo_id, self.eye, self.target_index)

    def padded(self, width: int = MAX_WINDOW) -> np.ndarray:
        """Left-pad with missing-marker columns to a fixed width."""
        w = self.width
        if w >= width:
            return self.matrix[:, -width:]
        out = np.full((N_ROWS, width), MISSING)
        out[:, width - w:] = self.matrix
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "patient": self.pseudo_id,
            "eye": self.eye,
            "index": self.target_index,
            "columns": list(self.column_indices),
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "provenance": {b: list(p) for b, p in zip(BIOMARKERS, self.provenance)},
            "target": {
                "date": self.target_date.isoformat(),
                "va_decimal": self.target_va_decimal,
                "va_logmar": self.target_va_logmar,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureWindow":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported window schema {d.get('schema_version')!r}")
        return cls(
            pseudo_id=d["patient"],
            eye=d["eye"],
            target_index=d["index"],
            matrix=np.array(d["matrix"], dtype=float),
            provenance=[list(d["provenance"][b]) for b in BIOMARKERS],
            target_date=date.fromisoformat(d["target"]["date"]),
            target_va_decimal=d["target"]["va_decimal"],
            target_va_logmar=d["target"]["va_logmar"],
            column_indices=list(d["columns"]),
        )


def _assign_to_exams(exam_dates, event_date) -> int:
    """Index of the nearest examination at or before event_date, or -1."""
    return bisect_right(exam_dates, event_date) - 1


def _collect_side_channels(patient: PatientRecord, eye_side: str, exam_dates):
    """Per-examination side-channel values, push-joined onto exam indices."""
    n = len(exam_dates)
    values = {name: [None] * n for name in ROW_NAMES[4:]}
    provenance = {b: [None] * n for b in BIOMARKERS}
    eye = patient.eyes[eye_side]

    for kind in ("apoplexy", "blood_thinning", "myocardial_infarction"):
        for ev in patient.anamnesis:
            if ev.kind != kind:
                continue
            idx = _assign_to_exams(exam_dates, ev.date)
            if idx >= 0:
                values[kind][idx] = True

    for t in eye.treatments:
        if t.medication not in MEDICATION_CODES:
            continue
        idx = _assign_to_exams(exam_dates, t.date)
        if idx >= 0:
            values["medication"][idx] = t.medication

    for m in eye.measurements:
        idx = _assign_to_exams(exam_dates, m.date)
        if idx < 0:
            continue
        if m.central_retinal_thickness is not None:
            values["central_retinal_thickness"][idx] = m.central_retinal_thickness
        if m.intraretinal_fluid is not None:
            values["intraretinal_fluid"][idx] = m.intraretinal_fluid
        if m.subretinal_fluid is not None:
            values["subretinal_fluid"][idx] = m.subretinal_fluid

    for scan in eye.oct_scans:
        idx = _assign_to_exams(exam_dates, scan.date)
        if idx < 0:
            continue
        for b in BIOMARKERS:
            state = scan.biomarkers.get(b)
            if state is None or state.label not in BIOMARKER_CODES:
                continue
            values[b][idx] = state.label
            provenance[b][idx] = state.provenance

    # Diagnosis events resolve all disease flags; explicit matches are not
    # overwritten by fallback-only resolutions from a later event.
    explicit_seen = {name: [False] * n for name in
                     ("amd_exudative", "dme", "rvo", "cataract",
                      "diabetic_retinopathy", "erm", "pseudophakia")}
    for diag in eye.diagnoses:
        if not diag.flags:
            continue
        idx = _assign_to_exams(exam_dates, diag.date)
        if idx < 0:
            continue
        for flag, value in diag.flags.items():
            if flag not in explicit_seen:
                continue
            is_explicit = bool(diag.explicit.get(flag, False))
            if explicit_seen[flag][idx] and not is_explicit:
                continue
            values[flag][idx] = value
            explicit_seen[flag][idx] = explicit_seen[flag][idx] or is_explicit

    return values, provenance


def build_windows(patient: PatientRecord, eye_side: str,
                  min_w: int = MIN_WINDOW, max_w: int = MAX_WINDOW):
    """All prediction windows for one eye, one per examination >= min_w."""
    if eye_side not in patient.eyes:
        raise SeriesTooShort(f"patient {patient.pseudo_id} has no {eye_side} eye data")
    series = patient.eyes[eye_side].va_series
    n = len(series)
    if n < min_w + 1:
        raise SeriesTooShort(
            f"need at least {min_w + 1} VA measurements, got {n}"
        )
    exam_dates = [p.date for p in series.points]
    values, provenance = _collect_side_channels(patient, eye_side, exam_dates)
    birth = date(patient.birth_year, 1, 1)
    sex_code = factorize(patient.sex, "sex")

    windows = []
    for i in range(min_w, n):
        j = max(0, i - max_w)
        cols = list(range(j, i))
        w = len(cols)
        matrix = np.full((N_ROWS, w), MISSING)
        for c, exam_idx in enumerate(cols):
            point = series[exam_idx]
            matrix[0, c] = (point.date - birth).days
            matrix[1, c] = patient.birth_year
            matrix[2, c] = sex_code
            matrix[VA_ROW, c] = point.va_decimal
            for name in ROW_NAMES[4:]:
                raw = values[name][exam_idx]
                if raw is not None:
                    matrix[ROW_INDEX[name], c] = factorize(raw, name)
        window_prov = [
            [provenance[b][exam_idx] for exam_idx in cols] for b in BIOMARKERS
        ]
        target = series[i]
        windows.append(
            FeatureWindow(
                pseudo_id=patient.pseudo_id,
                eye=eye_side,
                target_index=i,
                matrix=matrix,
                provenance=window_prov,
                target_date=target.date,
                target_va_decimal=target.va_decimal,
                target_va_logmar=target.va_logmar,
                column_indices=cols,
            )
        )
    return windows


def build_all_windows(corpus, min_w: int = MIN_WINDOW, max_w: int = MAX_WINDOW):
    """Windows for every qualifying eye, in canonical (patient, eye, index) order."""
    out = []
    for patient in sorted(corpus.patients, key=lambda p: p.pseudo_id):
        for eye_side in sorted(patient.eyes):
            if len(patient.eyes[eye_side].va_series) < min_w + 1:
                continue
            out.extend(build_windows(patient, eye_side, min_w, max_w))
    return out


def ablate(windows, mode: str):
    """Return new windows with OCT biomarker information removed.

    drop_annotated / drop_classified blank exactly the biomarker cells of
    that provenance; va_only blanks every row below the VA row.
    """
    if mode not in ABLATION_MODES:
        raise ValueError(f"ablation mode must be one of {ABLATION_MODES}, got {mode!r}")
    out = []
    for win in windows:
        matrix = win.matrix.copy()
        prov = [list(p) for p in win.provenance]
        if mode == "va_only":
            matrix[VA_ROW + 1:, :] = MISSING
            prov = [[None] * win.width for _ in BIOMARKERS]
        else:
            target = "annotated" if mode == "drop_annotated" else "classified"
            for bi, b in enumerate(BIOMARKERS):
                row = BIOMARKER_ROWS[b]
                for c in range(win.width):
                    if prov[bi][c] == target:
                        matrix[row, c] = MISSING
                        prov[bi][c] = None
        out.append(
            FeatureWindow(
                pseudo_id=win.pseudo_id,
                eye=win.eye,
                target_index=win.target_index,
                matrix=matrix,
                provenance=prov,
                target_date=win.target_date,
                target_va_decimal=win.target_va_decimal,
                target_va_logmar=win.target_va_logmar,
                column_indices=list(win.column_indices),
            )
        )
    return out


def save_windows(windows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for win in windows:
            fh.write(json.dumps(win.to_dict(), sort_keys=True))
            fh.write("\n")


def load_windows(path):
    windows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                windows.append(FeatureWindow.from_dict(json.loads(line)))
    return windows
