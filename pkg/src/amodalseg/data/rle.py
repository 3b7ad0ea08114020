"""Run-length codec for binary masks.

Row-major order; ``counts`` alternates runs of zeros and ones, starting with
zeros (the first count may be 0). Encoding is canonical: no zero-length runs
except a leading one, so encode/decode is a bijection on masks.
"""
from __future__ import annotations

import numpy as np

from ..errors import DatasetFormatError


def encode_mask(mask: np.ndarray) -> dict:
    flat = np.asarray(mask, dtype=bool).ravel()
    h, w = mask.shape
    if flat.size == 0:
        return {"size": [int(h), int(w)], "counts": []}
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": [int(h), int(w)], "counts": [int(c) for c in counts]}


def decode_mask(obj: dict) -> np.ndarray:
    try:
        h, w = (int(v) for v in obj["size"])
        counts = [int(c) for c in obj["counts"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"malformed RLE object: {exc}") from exc
    if any(c < 0 for c in counts):
        raise DatasetFormatError("RLE counts must be non-negative")
    if sum(counts) != h * w:
        raise DatasetFormatError(
            f"RLE counts sum to {sum(counts)}, expected {h * w} for a {h}x{w} mask"
        )
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    return np.repeat(values, counts).reshape(h, w)
