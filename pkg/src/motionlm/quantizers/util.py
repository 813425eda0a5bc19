"""Codebook usage diagnostics."""
from __future__ import annotations

import numpy as np


def codebook_utilization(codes: np.ndarray, codebook_size: int) -> float:
    """Fraction of codebook entries that appear in `codes`."""
    codes = np.asarray(codes, dtype=np.int64).reshape(-1)
    if codes.size and (codes.min() < 0 or codes.max() >= codebook_size):
        raise ValueError(f"codes out of range [0, {codebook_size})")
    return float(np.unique(codes).size) / float(codebook_size)
