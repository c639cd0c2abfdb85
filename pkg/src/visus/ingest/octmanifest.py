"""OCT scan manifest: a CSV index of 25-slice volumes plus biomarker labels.

Header: ``scan_id,patient_id,date,eye,slice_dir,elm,ellipsoid,
foveal_depression,scars,ped,subretinal_fibrosis``. Label values are
``phys``, ``path``, or ``unknown``; labelled biomarkers get provenance
"annotated". ``slice_dir`` is resolved relative to the manifest file and
must contain ``slice_00.pgm`` .. ``slice_24.pgm``.
"""

from __future__ import annotations

import csv
import os
from datetime import date

from ..errors import BadSliceCount, MalformedRow, MissingSlice
from .corpus import (
    BIOMARKERS,
    LABEL_PATHOLOGICAL,
    LABEL_PHYSIOLOGICAL,
    LABEL_UNKNOWN,
    PROVENANCE_ANNOTATED,
    SLICES_PER_SCAN,
    BiomarkerState,
    OctScan,
)

HEADER = ["scan_id", "patient_id", "date", "eye", "slice_dir"] + list(BIOMARKERS)

LABEL_CODES = {
    "phys": LABEL_PHYSIOLOGICAL,
    "path": LABEL_PATHOLOGICAL,
    "unknown": LABEL_UNKNOWN,
}


def slice_path(slice_dir: str, index: int) -> str:
    return os.path.join(slice_dir, f"slice_{index:02d}.pgm")


def load_oct_manifest(path):
    """Load scan stubs from a manifest file; returns list[OctScan].

    Raises MalformedRow on structural problems, MissingSlice /
    BadSliceCount when a referenced volume is incomplete.
    """
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != HEADER:
        raise MalformedRow(1, f"expected header {','.join(HEADER)!r}")
    scans = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise MalformedRow(line_no, f"expected {len(HEADER)} columns, got {len(row)}")
        scan_id, patient_id, date_str, eye, slice_dir = (c.strip() for c in row[:5])
        try:
            d = date.fromisoformat(date_str)
        except ValueError:
            raise MalformedRow(line_no, f"invalid date {date_str!r}") from None
        resolved = slice_dir if os.path.isabs(slice_dir) else os.path.join(base, slice_dir)
        _check_slices(scan_id, resolved)
        biomarkers = {}
        for name, code in zip(BIOMARKERS, row[5:]):
            code = code.strip()
            if code not in LABEL_CODES:
                raise MalformedRow(line_no, f"invalid label {code!r} for {name}")
            label = LABEL_CODES[code]
            provenance = PROVENANCE_ANNOTATED if label != LABEL_UNKNOWN else None
            biomarkers[name] = BiomarkerState(label=label, provenance=provenance)
        scans.append(
            OctScan(
                scan_id=scan_id,
                patient_id=patient_id,
                date=d,
                eye=eye,
                slice_dir=resolved,
                biomarkers=biomarkers,
            )
        )
    return scans


def _check_slices(scan_id: str, slice_dir: str) -> None:
    if not os.path.isdir(slice_dir):
        raise MissingSlice(scan_id, 0)
    slice_files = [
        name
        for name in os.listdir(slice_dir)
        if name.startswith("slice_") and name.endswith(".pgm")
    ]
    if len(slice_files) != SLICES_PER_SCAN:
        raise BadSliceCount(scan_id, len(slice_files))
    for i in range(SLICES_PER_SCAN):
        if not os.path.exists(slice_path(slice_dir, i)):
            raise MissingSlice(scan_id, i)
