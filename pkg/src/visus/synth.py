"""Seeded synthetic-corpus generator.

Emits exactly the file formats the ingest stage consumes (.xdt, IVOM CSV,
OCT manifest with PGM slices) plus a sidecar truth file, so the whole
pipeline can be exercised end-to-end without clinical data.

Visual-acuity trajectories are built on an 18-value decimal chart grid
(about 0.1 logMAR per step). Intended therapy moves are drawn in whole
double-steps (roughly 0.2 logMAR), which keeps them safely outside the
stabilizer band before noise; Gaussian logMAR noise is added afterwards
and the result snapped back to the chart grid. With zero noise the
pipeline-derived labels equal the sidecar truth exactly.

When the generative rule is informative, a scan's ELM/ellipsoid/PED states
encode the upcoming VA move, so predictors that read biomarkers can
anticipate changes that VA history alone cannot reveal.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .cohort import WslLabel, to_logmar
from .errors import InvalidConfig
from .ingest.corpus import BIOMARKERS
from .ingest.pgm import write_pgm
from .ingest import octmanifest
from .ingest.xdt import (
    F_ANAMNESIS,
    F_BIRTH_YEAR,
    F_CRT,
    F_DIAGNOSIS,
    F_EXAM_DATE,
    F_EYE_SIDE,
    F_FIRST_NAME,
    F_IRF,
    F_LAST_NAME,
    F_PATIENT_ID,
    F_SEX,
    F_SRF,
    F_TREATMENT,
    F_VA_DECIMAL,
    XdtRecord,
    serialize_xdt,
)

# Best-to-worst decimal chart; adjacent steps are ~0.1 logMAR.
CHART_DECIMALS = (
    2.0, 1.6, 1.25, 1.0, 0.8, 0.63, 0.5, 0.4, 0.32,
    0.25, 0.2, 0.16, 0.125, 0.1, 0.08, 0.063, 0.05, 0.04,
)
CHART_LOGMAR = tuple(to_logmar(v) for v in CHART_DECIMALS)

DISEASE_TEXTS = {
    "amd_exudative": ("feuchte AMD", "exsudative AMD"),
    "dme": ("diabetisches Makulaödem", "DMOE"),
    "rvo": ("ZVV", "retinaler Venenverschluss", "AVV"),
}

COMORBIDITY_TEXTS = {
    "cataract": "Katarakt",
    "diabetic_retinopathy": "Retinopathia",
    "erm": "epiretinale Gliose",
    "pseudophakia": "Pseudophakie",
}

ANAMNESIS_TEXTS = ("Blutverdünnung", "Apoplex", "Herzinfarkt")

_WSL_KEYS = ("winner", "stabilizer", "loser")
_WSL_BY_KEY = {
    "winner": WslLabel.WINNER,
    "stabilizer": WslLabel.STABILIZER,
    "loser": WslLabel.LOSER,
}


@dataclass
class SynthConfig:
    seed: int = 7
    patients: int = 100
    disease_mix: dict = field(
        default_factory=lambda: {"amd_exudative": 0.4, "dme": 0.35, "rvo": 0.25}
    )
    wsl_mix: dict = field(
        default_factory=lambda: {"winner": 0.25, "stabilizer": 0.5, "loser": 0.25}
    )
    va_noise: float = 0.0          # logMAR sigma added to the trend
    min_exams: int = 5
    max_exams: int = 12
    ivom_rate: float = 0.5         # chance of an injection at an exam
    ivom_ehr_echo: float = 0.5     # chance the EHR also records a CIS injection
    oct_rate: float = 0.7          # chance of an OCT scan at an exam
    oct_missing_rate: float = 0.0  # chance an annotated label is left unknown
    crt_rate: float = 0.5          # chance of a thickness value at an exam
    comorbidity_rate: float = 0.3
    anamnesis_rate: float = 0.3
    informative_biomarkers: bool = True
    slice_resolution: int = 32
    image_noise: float = 0.05
    shared_slice_dir: bool = False  # all scans reference one neutral slice set
    start_year: int = 2014

    def validate(self) -> None:
        for name, mix in (("disease_mix", self.disease_mix), ("wsl_mix", self.wsl_mix)):
            if abs(sum(mix.values()) - 1.0) > 1e-9 or any(v < 0 for v in mix.values()):
                raise InvalidConfig(f"{name} must be a probability vector, got {mix}")
        if self.va_noise < 0:
            raise InvalidConfig("va_noise must be >= 0")
        if self.patients < 1:
            raise InvalidConfig("need at least one patient")
        if self.min_exams < 2 or self.max_exams < self.min_exams:
            raise InvalidConfig("exam count range invalid")

    def to_dict(self) -> dict:
        return {
            k: (dict(v) if isinstance(v, dict) else v)
            for k, v in self.__dict__.items()
        }


def snap_to_chart(logmar: float) -> int:
    """Index of the chart value nearest in logMAR."""
    return int(np.argmin([abs(logmar - g) for g in CHART_LOGMAR]))


def _draw_moves(rng, n_moves: int, label_key: str):
    """Double-step move sequence whose sum realizes the global class."""
    if label_key == "winner":
        net = -(1 + int(rng.integers(0, 2)))  # -1 or -2 double-steps
    elif label_key == "loser":
        net = 1 + int(rng.integers(0, 2))
    else:
        net = 0
    extra = int(rng.integers(0, 2)) if n_moves >= abs(net) + 2 else 0
    ups = extra + max(net, 0)
    downs = extra + max(-net, 0)
    while ups + downs > n_moves:
        if extra > 0:
            extra -= 1
            ups -= 1
            downs -= 1
        else:
            ups = max(net, 0)
            downs = max(-net, 0)
            break
    moves = [2] * ups + [-2] * downs + [0] * (n_moves - ups - downs)
    rng.shuffle(moves)
    return moves


def _trajectory(rng, n_exams: int, label_key: str):
    """Chart-index path realizing the intended global class."""
    moves = _draw_moves(rng, n_exams - 1, label_key)
    cumulative = np.concatenate([[0], np.cumsum(moves)])
    lo, hi = int(cumulative.min()), int(cumulative.max())
    start_min = max(2, -lo)
    start_max = min(len(CHART_DECIMALS) - 3, len(CHART_DECIMALS) - 1 - hi)
    if start_max < start_min:
        start = max(0, min(len(CHART_DECIMALS) - 1 - hi, -lo))
    else:
        start = int(rng.integers(start_min, start_max + 1))
    steps = [start + int(c) for c in cumulative]
    return steps, moves


@dataclass
class SynthEye:
    disease: str
    global_label: str
    exam_dates: list
    steps: list            # intended chart indices (pre-noise)
    observed: list         # chart indices after noise + snap
    moves: list            # intended double-step moves between exams
    ivom: list             # (exam_idx, medication, echoed_in_ehr)
    scans: list            # (exam_idx, scan_id, {biomarker: 0/1}, {biomarker: known})
    crt: list              # (exam_idx, crt value)
    comorbidities: list    # diagnosis texts recorded at first exam
    diagnosis_text: str


@dataclass
class SynthPatient:
    raw_id: str
    sex: str
    birth_year: int
    anamnesis: str | None
    eyes: dict  # side -> SynthEye


def _generate_eye(rng, config: SynthConfig, scan_counter) -> SynthEye:
    disease = _draw_key(rng, config.disease_mix)
    label_key = _draw_key(rng, config.wsl_mix)
    n_exams = int(rng.integers(config.min_exams, config.max_exams + 1))
    steps, moves = _trajectory(rng, n_exams, label_key)

    start = date(config.start_year, 1, 1) + timedelta(days=int(rng.integers(0, 1095)))
    dates = [start]
    for _ in range(n_exams - 1):
        dates.append(dates[-1] + timedelta(days=int(rng.integers(28, 71))))

    observed = []
    for s in steps:
        if config.va_noise > 0:
            noisy = CHART_LOGMAR[s] + rng.normal(0.0, config.va_noise)
            observed.append(snap_to_chart(noisy))
        else:
            observed.append(s)

    ivom = []
    medications = ("Eylea", "Lucentis")
    med_offset = int(rng.integers(0, 2))
    for i in range(n_exams):
        if rng.random() < config.ivom_rate:
            med = medications[(med_offset + len(ivom)) % 2]
            ivom.append((i, med, rng.random() < config.ivom_ehr_echo))

    scans = []
    for i in range(n_exams):
        if rng.random() >= config.oct_rate:
            continue
        truth = {}
        upcoming = moves[i] if i < n_exams - 1 else 0
        for k, b in enumerate(BIOMARKERS):
            if config.informative_biomarkers and b == "elm":
                truth[b] = 1 if upcoming > 0 else 0
            elif config.informative_biomarkers and b == "ellipsoid":
                truth[b] = 1 if upcoming > 0 else 0
            elif config.informative_biomarkers and b == "ped":
                truth[b] = 1 if upcoming < 0 else 0
            else:
                truth[b] = int(rng.random() < 0.3)
        known = {b: (rng.random() >= config.oct_missing_rate) for b in BIOMARKERS}
        scans.append((i, f"S{next(scan_counter):06d}", truth, known))

    crt = []
    for i in range(n_exams):
        if rng.random() < config.crt_rate:
            crt.append((i, int(250 + 25 * steps[i] + rng.integers(-20, 21))))

    comorbidities = [
        text for flag, text in sorted(COMORBIDITY_TEXTS.items())
        if rng.random() < config.comorbidity_rate
    ]
    texts = DISEASE_TEXTS[disease]
    diagnosis_text = texts[int(rng.integers(0, len(texts)))]

    return SynthEye(
        disease=disease,
        global_label=label_key,
        exam_dates=dates,
        steps=steps,
        observed=observed,
        moves=moves,
        ivom=ivom,
        scans=scans,
        crt=crt,
        comorbidities=comorbidities,
        diagnosis_text=diagnosis_text,
    )


def _draw_key(rng, mix: dict) -> str:
    keys = sorted(mix)
    probs = np.array([mix[k] for k in keys], dtype=float)
    probs = probs / probs.sum()
    return keys[int(rng.choice(len(keys), p=probs))]


def generate_patients(config: SynthConfig):
    """Deterministic in-memory patient set for the given configuration."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    scan_counter = iter(range(1, 10 ** 9))
    patients = []
    for idx in range(1, config.patients + 1):
        sex = ("male", "female", "diverse")[int(rng.choice(3, p=[0.48, 0.48, 0.04]))]
        birth_year = int(rng.integers(1930, 1976))
        anamnesis = None
        if rng.random() < config.anamnesis_rate:
            anamnesis = ANAMNESIS_TEXTS[int(rng.integers(0, len(ANAMNESIS_TEXTS)))]
        eyes = {}
        for side in ("left", "right"):
            if rng.random() < 0.85:
                eyes[side] = _generate_eye(rng, config, scan_counter)
        if not eyes:
            eyes["right"] = _generate_eye(rng, config, scan_counter)
        patients.append(
            SynthPatient(
                raw_id=f"PAT{idx:05d}",
                sex=sex,
                birth_year=birth_year,
                anamnesis=anamnesis,
                eyes=eyes,
            )
        )
    return patients


# -- slice image synthesis ------------------------------------------------

def band_rows(biomarker: str, resolution: int):
    """Row range of the bright band that marks a pathological biomarker."""
    k = BIOMARKERS.index(biomarker)
    center = (0.1 + 0.8 * k / (len(BIOMARKERS) - 1)) * (resolution - 1)
    width = max(1, resolution // 16)
    r0 = int(round(center - width / 2))
    r0 = min(max(r0, 0), resolution - width)
    return r0, r0 + width


def render_slice(biomarker_states: dict, slice_pos: int, resolution: int,
                 rng, noise: float, intensity: float = 1.0) -> np.ndarray:
    """One B-scan: smooth background plus one bright band per pathological
    biomarker. ``slice_pos`` is the index within the central range."""
    rows = np.linspace(0, 1, resolution)[:, None]
    img = 40 + 60 * rows + 10 * math.sin(slice_pos)
    img = np.repeat(img, resolution, axis=1)
    for b in BIOMARKERS:
        if biomarker_states.get(b):
            r0, r1 = band_rows(b, resolution)
            img[r0:r1, :] += 120.0 * intensity
    if noise > 0:
        img = img + rng.normal(0.0, noise * 255.0, size=img.shape)
    return np.clip(img, 0, 255)


def _write_scan_dir(dirname: str, states: dict, resolution: int, rng, noise: float) -> None:
    os.makedirs(dirname, exist_ok=True)
    for i in range(25):
        in_range = 8 <= i <= 18
        intensity = float(rng.uniform(0.5, 1.0))
        img = render_slice(states if in_range else {}, i, resolution, rng, noise, intensity)
        write_pgm(os.path.join(dirname, f"slice_{i:02d}.pgm"), img)


# -- file emission ---------------------------------------------------------

def generate_corpus(config: SynthConfig, out_dir: str) -> dict:
    """Write .xdt / ivom.csv / oct manifest + slices / truth.json.

    Returns the sidecar truth dictionary (also written to truth.json).
    """
    patients = generate_patients(config)
    rng_img = np.random.default_rng(config.seed + 1)

    os.makedirs(os.path.join(out_dir, "ehr"), exist_ok=True)
    oct_dir = os.path.join(out_dir, "oct")
    os.makedirs(oct_dir, exist_ok=True)

    records = []
    ivom_rows = []
    manifest_rows = []

    shared_dir = None
    if config.shared_slice_dir:
        shared_dir = os.path.join(oct_dir, "scans", "shared")
        _write_scan_dir(shared_dir, {}, config.slice_resolution, rng_img, config.image_noise)

    for patient in patients:
        records.append(XdtRecord.make(F_PATIENT_ID, patient.raw_id))
        records.append(XdtRecord.make(F_LAST_NAME, f"Nachname-{patient.raw_id}"))
        records.append(XdtRecord.make(F_FIRST_NAME, "Vorname"))
        records.append(XdtRecord.make(F_BIRTH_YEAR, str(patient.birth_year)))
        records.append(XdtRecord.make(F_SEX, {"male": "m", "female": "w", "diverse": "d"}[patient.sex]))

        blocks = []  # (date, side, exam_idx, eye)
        for side, eye in sorted(patient.eyes.items()):
            for i, d in enumerate(eye.exam_dates):
                blocks.append((d, side, i, eye))
        blocks.sort(key=lambda b: (b[0], b[1]))

        anamnesis_done = False
        for d, side, i, eye in blocks:
            records.append(XdtRecord.make(F_EXAM_DATE, d.isoformat()))
            records.append(XdtRecord.make(F_EYE_SIDE, side))
            records.append(
                XdtRecord.make(F_VA_DECIMAL, repr(CHART_DECIMALS[eye.observed[i]]))
            )
            if i == 0:
                records.append(XdtRecord.make(F_DIAGNOSIS, eye.diagnosis_text))
                for text in eye.comorbidities:
                    records.append(XdtRecord.make(F_DIAGNOSIS, text))
            if not anamnesis_done and patient.anamnesis:
                records.append(XdtRecord.make(F_ANAMNESIS, patient.anamnesis))
                anamnesis_done = True
            for exam_idx, crt_value in eye.crt:
                if exam_idx == i:
                    records.append(XdtRecord.make(F_CRT, str(crt_value)))
            for exam_idx, med, echoed in eye.ivom:
                if exam_idx == i:
                    ivom_rows.append(
                        f"{patient.raw_id},{d.isoformat()},{side},{med}"
                    )
                    if echoed:
                        records.append(XdtRecord.make(F_TREATMENT, f"IVOM {med}"))
            for exam_idx, scan_id, truth, known in eye.scans:
                if exam_idx != i:
                    continue
                if shared_dir is not None:
                    rel_dir = os.path.join("scans", "shared")
                else:
                    rel_dir = os.path.join("scans", scan_id)
                    states = {b: bool(truth[b]) for b in BIOMARKERS}
                    _write_scan_dir(
                        os.path.join(oct_dir, rel_dir),
                        states,
                        config.slice_resolution,
                        rng_img,
                        config.image_noise,
                    )
                labels = []
                for b in BIOMARKERS:
                    if not known[b]:
                        labels.append("unknown")
                    else:
                        labels.append("path" if truth[b] else "phys")
                manifest_rows.append(
                    ",".join(
                        [scan_id, patient.raw_id, d.isoformat(), side, rel_dir] + labels
                    )
                )

    with open(os.path.join(out_dir, "ehr", "export.xdt"), "wb") as fh:
        fh.write(serialize_xdt(records))
    with open(os.path.join(out_dir, "ivom.csv"), "w", encoding="utf-8") as fh:
        fh.write("patient_id,date,eye,medication\n")
        for row in ivom_rows:
            fh.write(row + "\n")
    with open(os.path.join(oct_dir, "manifest.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(octmanifest.HEADER) + "\n")
        for row in manifest_rows:
            fh.write(row + "\n")

    truth = _truth_sidecar(config, patients)
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return truth


def _truth_sidecar(config: SynthConfig, patients) -> dict:
    truth: dict = {"seed": config.seed, "patients": {}}
    for patient in patients:
        entry: dict = {
            "sex": patient.sex,
            "birth_year": patient.birth_year,
            "eyes": {},
        }
        for side, eye in sorted(patient.eyes.items()):
            local = [
                _WSL_BY_KEY[
                    "winner" if m < 0 else "loser" if m > 0 else "stabilizer"
                ].value
                for m in eye.moves
            ]
            entry["eyes"][side] = {
                "disease": eye.disease,
                "global_label": _WSL_BY_KEY[eye.global_label].value,
                "exam_dates": [d.isoformat() for d in eye.exam_dates],
                "va_decimal": [CHART_DECIMALS[s] for s in eye.observed],
                "intended_va_decimal": [CHART_DECIMALS[s] for s in eye.steps],
                "local_labels": local,
                "scans": {
                    scan_id: {b: int(truth_states[b]) for b in BIOMARKERS}
                    for _i, scan_id, truth_states, _known in eye.scans
                },
            }
        truth["patients"][patient.raw_id] = entry
    return truth


# -- standalone slice dataset ----------------------------------------------

def generate_oct_dataset(biomarker: str, n_pathological: int, ratio: float,
                         seed: int = 0, resolution: int = 32,
                         noise: float = 0.05, n_slices: int = 11):
    """Labelled slice stacks for one biomarker with a phys/path imbalance.

    Returns (stacks, labels): stacks of shape (n_scans, n_slices, res, res)
    with scan-level labels; the physiological class has
    round(ratio * n_pathological) scans. Per-slice band intensity varies,
    so slice difficulty varies while scans stay separable.
    """
    if biomarker not in BIOMARKERS:
        raise InvalidConfig(f"unknown biomarker {biomarker!r}")
    if n_pathological < 1 or ratio <= 0:
        raise InvalidConfig("need n_pathological >= 1 and ratio > 0")
    rng = np.random.default_rng(seed)
    n_phys = int(round(ratio * n_pathological))
    labels = np.array([1] * n_pathological + [0] * n_phys)
    stacks = np.empty((len(labels), n_slices, resolution, resolution))
    for s, lab in enumerate(labels):
        states = {biomarker: bool(lab)}
        for k in range(n_slices):
            intensity = float(rng.uniform(0.25, 1.0))
            stacks[s, k] = (
                render_slice(states, k, resolution, rng, noise, intensity) / 255.0
            )
    return stacks, labels
