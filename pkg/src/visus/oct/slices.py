"""OCT slice extraction: read, bilinear-resize, and normalize B-scans."""

from __future__ import annotations

import os

import numpy as np

from ..errors import BadRange, MissingSlice
from ..ingest.corpus import SLICES_PER_SCAN
from ..ingest.octmanifest import slice_path
from ..ingest.pgm import read_pgm

SLICE_LO = 8
SLICE_HI = 18

DEFAULT_RESOLUTION = 32  # paper-scale runs use 256


def bilinear_resize(image: np.ndarray, size: int) -> np.ndarray:
    """Resize a 2-D array to (size, size) with bilinear interpolation."""
    img = np.asarray(image, dtype=float)
    h, w = img.shape
    if (h, w) == (size, size):
        return img.copy()
    ys = (np.arange(size) + 0.5) * (h / size) - 0.5
    xs = (np.arange(size) + 0.5) * (w / size) - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - fx) + img[np.ix_(y0, x1)] * fx
    bottom = img[np.ix_(y1, x0)] * (1 - fx) + img[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def extract_slices(scan, lo: int = SLICE_LO, hi: int = SLICE_HI,
                   resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Load the central slice range of a scan as a (k, res, res) stack in [0, 1]."""
    if not (0 <= lo <= hi < SLICES_PER_SCAN):
        raise BadRange(f"slice range [{lo}, {hi}] outside [0, {SLICES_PER_SCAN - 1}]")
    out = np.empty((hi - lo + 1, resolution, resolution))
    for k, index in enumerate(range(lo, hi + 1)):
        path = slice_path(scan.slice_dir, index)
        if not os.path.exists(path):
            raise MissingSlice(scan.scan_id, index)
        img = read_pgm(path).astype(float) / 255.0
        out[k] = bilinear_resize(img, resolution)
    return out
