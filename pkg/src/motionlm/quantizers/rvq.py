"""Residual vector quantization: a cascade of codebooks over residuals.

Stage i quantizes the residual left by stages < i; the reconstruction
is the sum of the selected entries. Every stage built by
``RvqStack.create`` reserves index 0 as a frozen zero entry ("rest"
code), which guarantees the per-stage residual norm can never grow:
the nearest entry is at least as close as adding nothing. Stacks
assembled from arbitrary codebooks don't carry that guarantee.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .vq import Codebook, vq_quantize, vq_ema_update


@dataclass
class RvqStack:
    stages: List[Codebook]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("need at least one stage")
        dims = {cb.dim for cb in self.stages}
        if len(dims) != 1:
            raise ValueError(f"all stages must share dimension, got {dims}")

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def dim(self) -> int:
        return self.stages[0].dim

    @classmethod
    def create(cls, depth: int, size: int, dim: int, rng, scale: float = 1.0) -> "RvqStack":
        stages = []
        for _ in range(depth):
            cb = Codebook.random_init(size, dim, rng, scale)
            cb.entries[0] = 0.0
            cb.ema_sums[0] = 0.0
            stages.append(cb)
        return cls(stages=stages)


def rvq_quantize(latents: np.ndarray, stack: RvqStack):
    """Quantize [T, d] latents -> (codes [T, depth], values [T, d])."""
    latents = np.asarray(latents, dtype=np.float64)
    residual = latents.copy()
    codes = np.zeros((latents.shape[0], stack.depth), dtype=np.int64)
    values = np.zeros_like(latents)
    for i, cb in enumerate(stack.stages):
        c, v = vq_quantize(residual, cb)
        codes[:, i] = c
        values += v
        residual -= v
    return codes, values


def rvq_dequantize(codes: np.ndarray, stack: RvqStack) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2 or codes.shape[1] != stack.depth:
        raise ValueError(f"codes must be [T, {stack.depth}], got {codes.shape}")
    values = np.zeros((codes.shape[0], stack.dim))
    for i, cb in enumerate(stack.stages):
        if codes[:, i].min(initial=0) < 0 or codes[:, i].max(initial=0) >= cb.size:
            raise ValueError(f"stage {i} codes out of range [0, {cb.size})")
        values += cb.entries[codes[:, i]]
    return values


def rvq_ema_update(stack: RvqStack, latents: np.ndarray, decay: float,
                   reseed_after: int = 10, rng=None) -> RvqStack:
    """Per-stage EMA update on the residual stream; zero entries stay pinned."""
    latents = np.asarray(latents, dtype=np.float64)
    residual = latents.copy()
    stages = []
    for cb in stack.stages:
        codes, values = vq_quantize(residual, cb)
        new = vq_ema_update(cb, residual, codes, decay, reseed_after, rng)
        new.entries[0] = 0.0
        new.ema_sums[0] = 0.0
        new.dead_streak[0] = 0
        stages.append(new)
        residual -= values
    return RvqStack(stages=stages)
