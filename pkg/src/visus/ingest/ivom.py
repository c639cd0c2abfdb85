"""Injection-therapy events exported by the clinical information system.

CSV with header ``patient_id,date,eye,medication``. Rows that fail
validation are rejected individually with a reason; parsing never aborts.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date

from ..errors import MalformedRow

HEADER = ["patient_id", "date", "eye", "medication"]

MEDICATIONS = {"eylea": "Eylea", "lucentis": "Lucentis"}

VALID_EYES = ("left", "right")


@dataclass(frozen=True)
class IvomEvent:
    patient_id: str
    date: date
    eye: str
    medication: str


def parse_ivom_csv(data: bytes):
    """Parse the CSV byte stream into (events, rejected_rows)."""
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != HEADER:
        raise MalformedRow(1, f"expected header {','.join(HEADER)!r}")
    events = []
    rejects = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            rejects.append(MalformedRow(line_no, f"expected 4 columns, got {len(row)}"))
            continue
        patient_id, date_str, eye, medication = (c.strip() for c in row)
        if not patient_id:
            rejects.append(MalformedRow(line_no, "empty patient id"))
            continue
        try:
            d = date.fromisoformat(date_str)
        except ValueError:
            rejects.append(MalformedRow(line_no, f"invalid date {date_str!r}"))
            continue
        if eye not in VALID_EYES:
            rejects.append(MalformedRow(line_no, f"invalid eye {eye!r}"))
            continue
        med = MEDICATIONS.get(medication.lower())
        if med is None:
            rejects.append(MalformedRow(line_no, f"unknown medication {medication!r}"))
            continue
        events.append(IvomEvent(patient_id, d, eye, med))
    return events, rejects
