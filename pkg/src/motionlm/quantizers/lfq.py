"""Lookup-free quantization: per-channel sign, binary codes.

values = sign(latents) in {-1, +1}^d with sign(0) = +1; the code packs
one bit per channel (bit = 1 for +1), channel 0 most significant.
"""
from __future__ import annotations

import numpy as np


def lfq_quantize(latents: np.ndarray):
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2:
        raise ValueError(f"latents must be [T, d], got {latents.shape}")
    if not np.isfinite(latents).all():
        raise ValueError("latents contain non-finite values")
    values = np.where(latents >= 0.0, 1.0, -1.0)
    bits = (values > 0).astype(np.int64)
    d = latents.shape[1]
    weights = 1 << np.arange(d - 1, -1, -1, dtype=np.int64)
    return bits @ weights, values


def lfq_dequantize(codes: np.ndarray, dim: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if codes.min(initial=0) < 0 or codes.max(initial=0) >= (1 << dim):
        raise ValueError(f"codes out of range [0, {1 << dim})")
    shifts = np.arange(dim - 1, -1, -1, dtype=np.int64)
    bits = (codes[..., None] >> shifts) & 1
    return np.where(bits > 0, 1.0, -1.0)
