"""Patient-grouped train/validation/test splitting."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyDataset

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


def split_dataset(windows, seed: int, fractions=DEFAULT_FRACTIONS):
    """Seeded 80/10/10 split at the patient level.

    All windows of a patient land in the same part, so no patient
    straddles splits. Part sizes are the rounded fractions of the patient
    count.
    """
    if not windows:
        raise EmptyDataset("no windows to split")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    patients = sorted({w.pseudo_id for w in windows})
    rng = np.random.default_rng(seed)
    order = [patients[i] for i in rng.permutation(len(patients))]
    n = len(order)
    a = round(fractions[0] * n)
    b = round((fractions[0] + fractions[1]) * n)
    groups = {
        "train": set(order[:a]),
        "validation": set(order[a:b]),
        "test": set(order[b:]),
    }
    parts = ([], [], [])
    for w in windows:
        if w.pseudo_id in groups["train"]:
            parts[0].append(w)
        elif w.pseudo_id in groups["validation"]:
            parts[1].append(w)
        else:
            parts[2].append(w)
    return parts
