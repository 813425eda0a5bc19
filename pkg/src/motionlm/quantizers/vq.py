"""Learned vector quantization with EMA codebook updates.

Nearest-neighbor assignment in Euclidean distance (ties -> lowest
index). The codebook learns by exponential moving averages of counts
and latent sums: new = decay * old + batch increment, entries
re-centered at sums/counts wherever counts are meaningfully positive.
Entries with zero batch usage for `reseed_after` consecutive updates
are reseeded from random batch latents.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COUNT_EPS = 1e-9


@dataclass
class Codebook:
    entries: np.ndarray                 # [K, d]
    ema_counts: np.ndarray = None       # [K]
    ema_sums: np.ndarray = None         # [K, d]
    dead_streak: np.ndarray = None      # [K] consecutive zero-usage updates

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2 or self.entries.shape[0] < 1:
            raise ValueError(f"entries must be [K, d] with K >= 1, got {self.entries.shape}")
        if not np.isfinite(self.entries).all():
            raise ValueError("codebook entries must be finite")
        k = self.entries.shape[0]
        if self.ema_counts is None:
            self.ema_counts = np.ones(k)
        if self.ema_sums is None:
            self.ema_sums = self.entries.copy()
        if self.dead_streak is None:
            self.dead_streak = np.zeros(k, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def random_init(cls, size: int, dim: int, rng, scale: float = 1.0) -> "Codebook":
        return cls(entries=rng.normal(0.0, scale, size=(size, dim)))

    def copy(self) -> "Codebook":
        return Codebook(entries=self.entries.copy(),
                        ema_counts=self.ema_counts.copy(),
                        ema_sums=self.ema_sums.copy(),
                        dead_streak=self.dead_streak.copy())


def vq_quantize(latents: np.ndarray, codebook: Codebook):
    """Quantize [T, d] latents -> (codes [T], values [T, d])."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[1] != codebook.dim:
        raise ValueError(f"latents must be [T, {codebook.dim}], got {latents.shape}")
    # explicit squared distances keep exact ties exact (argmin -> lowest index)
    diff = latents[:, None, :] - codebook.entries[None, :, :]
    d2 = np.einsum("tkd,tkd->tk", diff, diff)
    codes = np.argmin(d2, axis=1)
    return codes, codebook.entries[codes]


def vq_ema_update(codebook: Codebook, latents: np.ndarray, codes: np.ndarray,
                  decay: float, reseed_after: int = 10, rng=None) -> Codebook:
    """EMA codebook step; returns a new Codebook (input left untouched)."""
    if not (0.0 < decay < 1.0):
        raise ValueError(f"decay must be in (0, 1), got {decay}")
    latents = np.asarray(latents, dtype=np.float64).reshape(-1, codebook.dim)
    codes = np.asarray(codes, dtype=np.int64).reshape(-1)
    if latents.shape[0] != codes.shape[0]:
        raise ValueError("latents/codes length mismatch")
    k = codebook.size
    batch_counts = np.bincount(codes, minlength=k).astype(np.float64)
    batch_sums = np.zeros((k, codebook.dim))
    np.add.at(batch_sums, codes, latents)

    counts = decay * codebook.ema_counts + batch_counts
    sums = decay * codebook.ema_sums + batch_sums
    entries = np.where((counts > COUNT_EPS)[:, None], sums / np.maximum(counts, COUNT_EPS)[:, None],
                       codebook.entries)
    streak = np.where(batch_counts > 0, 0, codebook.dead_streak + 1)

    dead = streak >= reseed_after
    if dead.any() and latents.shape[0] > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        picks = rng.integers(0, latents.shape[0], size=int(dead.sum()))
        entries = entries.copy()
        entries[dead] = latents[picks]
        counts = counts.copy()
        sums = sums.copy()
        counts[dead] = 1.0
        sums[dead] = latents[picks]
        streak = streak.copy()
        streak[dead] = 0
    return Codebook(entries=entries, ema_counts=counts, ema_sums=sums,
                    dead_streak=streak)
