"""Line-oriented xDT-style health-record format.

Grammar (documented in docs/formats.md):

    line    := LLL FFFF payload "\\n"
    LLL     := 3 ASCII digits, the byte length of the whole line
               including the single "\\n" terminator
    FFFF    := 4 ASCII digits, the field identifier
    payload := UTF-8 text without "\\n"

Unknown field identifiers are preserved as opaque records and reported as
warnings, never failures. A new patient entry starts at every patient-id
field (3000).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

from ..errors import MalformedLine, LengthMismatch

# Field identifier table. Identity fields are consumed by pseudonymization
# and never stored downstream.
F_RECORD_TYPE = 8000
F_PATIENT_ID = 3000
F_LAST_NAME = 3101
F_FIRST_NAME = 3102
F_BIRTH_YEAR = 3103
F_SEX = 3110
F_EXAM_DATE = 6200
F_EYE_SIDE = 6210
F_VA_DECIMAL = 6220
F_DIAGNOSIS = 6225
F_TREATMENT = 6230
F_ANAMNESIS = 6240
F_CRT = 6260
F_IRF = 6262
F_SRF = 6264

KNOWN_FIELDS = {
    F_RECORD_TYPE: "record_type",
    F_PATIENT_ID: "patient_id",
    F_LAST_NAME: "last_name",
    F_FIRST_NAME: "first_name",
    F_BIRTH_YEAR: "birth_year",
    F_SEX: "sex",
    F_EXAM_DATE: "exam_date",
    F_EYE_SIDE: "eye_side",
    F_VA_DECIMAL: "va_decimal",
    F_DIAGNOSIS: "diagnosis",
    F_TREATMENT: "treatment",
    F_ANAMNESIS: "anamnesis",
    F_CRT: "central_retinal_thickness",
    F_IRF: "intraretinal_fluid",
    F_SRF: "subretinal_fluid",
}

SEX_CODES = {"m": "male", "w": "female", "f": "female", "d": "diverse"}

_OVERHEAD = 8  # 3 length digits + 4 field digits + 1 newline


@dataclass(frozen=True)
class XdtRecord:
    length: int
    field_id: int
    payload: str

    @classmethod
    def make(cls, field_id: int, payload: str) -> "XdtRecord":
        blen = _OVERHEAD + len(payload.encode("utf-8"))
        if blen > 999:
            raise ValueError(f"payload too long for field {field_id}: {blen} bytes")
        return cls(length=blen, field_id=field_id, payload=payload)

    def to_line(self) -> bytes:
        return f"{self.length:03d}{self.field_id:04d}{self.payload}\n".encode("utf-8")


def serialize_xdt(records) -> bytes:
    return b"".join(r.to_line() for r in records)


def parse_xdt(data: bytes):
    """Parse a byte stream into patient-entry groups of records.

    Returns (groups, warnings): groups is a list of record lists, one per
    patient entry (started by each patient-id field); warnings collect
    unknown field ids and any records seen before the first patient id.

    Raises MalformedLine / LengthMismatch on structurally invalid input.
    """
    records = []
    warnings = []
    if data and not data.endswith(b"\n"):
        raise MalformedLine(data.count(b"\n") + 1, "missing newline terminator")
    line_no = 0
    for chunk in data.split(b"\n")[:-1]:  # split only on the \n terminator
        raw = chunk + b"\n"
        line_no += 1
        if len(raw) < _OVERHEAD:
            raise MalformedLine(line_no, f"line shorter than minimum {_OVERHEAD} bytes")
        head = raw[:7]
        if not head.isdigit():
            raise MalformedLine(line_no, f"non-digit length/field header {head!r}")
        declared = int(head[:3])
        if declared != len(raw):
            raise LengthMismatch(line_no, declared, len(raw))
        field_id = int(head[3:7])
        try:
            payload = raw[7:-1].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(line_no, f"payload is not valid UTF-8: {exc}") from exc
        if field_id not in KNOWN_FIELDS:
            warnings.append(f"line {line_no}: unknown field id {field_id:04d}")
        records.append(XdtRecord(length=declared, field_id=field_id, payload=payload))

    groups = []
    current = None
    leading = 0
    for rec in records:
        if rec.field_id == F_PATIENT_ID:
            current = [rec]
            groups.append(current)
        elif current is None:
            leading += 1
        else:
            current.append(rec)
    if leading:
        warnings.append(f"{leading} record(s) before first patient id ignored for grouping")
    return groups, warnings


@dataclass
class RawEvent:
    date: date
    eye: str | None
    kind: str
    payload: str


@dataclass
class RawEhrPatient:
    """Interpreted patient entry, still carrying its raw identifier."""

    raw_id: str
    sex: str = "diverse"
    birth_year: int = 0
    events: list = field(default_factory=list)  # RawEvent, file order
    problems: list = field(default_factory=list)


def extract_patient(group) -> RawEhrPatient:
    """Interpret one record group against the field table.

    Exam-scoped fields (VA, diagnosis, treatment, OCT values) apply to the
    most recent exam-date record, with the eye side taken from the most
    recent eye-side record of the same exam block. Events without a date
    context are recorded as problems.
    """
    patient = RawEhrPatient(raw_id=group[0].payload)
    current_date = None
    current_eye = None
    for rec in group[1:]:
        fid = rec.field_id
        if fid in (F_RECORD_TYPE, F_LAST_NAME, F_FIRST_NAME):
            continue  # identity / envelope fields are never stored
        if fid == F_BIRTH_YEAR:
            try:
                patient.birth_year = int(rec.payload)
            except ValueError:
                patient.problems.append(f"bad birth year {rec.payload!r}")
        elif fid == F_SEX:
            patient.sex = SEX_CODES.get(rec.payload.strip().lower(), rec.payload.strip().lower())
        elif fid == F_EXAM_DATE:
            try:
                current_date = date.fromisoformat(rec.payload.strip())
            except ValueError:
                current_date = None
                patient.problems.append(f"bad exam date {rec.payload!r}")
            current_eye = None
        elif fid == F_EYE_SIDE:
            current_eye = rec.payload.strip()
        elif fid in (F_VA_DECIMAL, F_DIAGNOSIS, F_TREATMENT, F_CRT, F_IRF, F_SRF):
            if current_date is None:
                patient.problems.append(f"{KNOWN_FIELDS[fid]} without exam date")
                continue
            patient.events.append(
                RawEvent(current_date, current_eye, KNOWN_FIELDS[fid], rec.payload)
            )
        elif fid == F_ANAMNESIS:
            if current_date is None:
                patient.problems.append("anamnesis without exam date")
                continue
            patient.events.append(RawEvent(current_date, None, "anamnesis", rec.payload))
        # unknown ids stay opaque: preserved in the byte stream, ignored here
    return patient
