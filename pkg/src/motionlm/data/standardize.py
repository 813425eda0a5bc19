"""Channel standardization schemes over pooled motion datasets.

Channels are the flattened joint*xyz axes. Four schemes:
  none     x
  standard (x - mu) / sigma           per channel
  avg-std  (x - mu) / sigma_avg       shared sigma_avg = mean of channel sigmas
  min-max  (x - xmin) / (xmax - xmin) per channel

Positions form a single modality group, so avg-std has one sigma_avg.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clips import MotionClip

SCHEMES = ("none", "standard", "avg-std", "min-max")
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class StandardizationStats:
    scheme: str
    mu: Optional[np.ndarray] = None          # [channels]
    sigma: Optional[np.ndarray] = None       # [channels]
    sigma_avg: Optional[float] = None
    xmin: Optional[np.ndarray] = None        # [channels]
    xmax: Optional[np.ndarray] = None        # [channels]

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def channels(self) -> Optional[int]:
        for arr in (self.mu, self.sigma, self.xmin, self.xmax):
            if arr is not None:
                return len(arr)
        return None

    def to_dict(self) -> dict:
        out = {"scheme": self.scheme}
        for name in ("mu", "sigma", "xmin", "xmax"):
            val = getattr(self, name)
            if val is not None:
                out[name] = np.asarray(val).tolist()
        if self.sigma_avg is not None:
            out["sigma_avg"] = float(self.sigma_avg)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        kw = {"scheme": d["scheme"]}
        for name in ("mu", "sigma", "xmin", "xmax"):
            if name in d:
                kw[name] = np.asarray(d[name], dtype=np.float64)
        if "sigma_avg" in d:
            kw["sigma_avg"] = float(d["sigma_avg"])
        return cls(**kw)


def _pool_channels(dataset) -> np.ndarray:
    """Stack all frames/agents of all clips into [samples, channels]."""
    if not dataset:
        raise ValueError("empty dataset")
    chans = dataset[0].joints * 3
    rows = []
    for clip in dataset:
        if clip.joints * 3 != chans:
            raise ValueError("clips with mismatched channel counts in dataset")
        rows.append(clip.positions.reshape(-1, chans))
    return np.concatenate(rows, axis=0).astype(np.float64)


def fit_stats(dataset, scheme: str) -> StandardizationStats:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    pooled = _pool_channels(dataset)
    if scheme == "none":
        return StandardizationStats(scheme="none")
    mu = pooled.mean(axis=0)
    if scheme == "min-max":
        xmin = pooled.min(axis=0)
        xmax = pooled.max(axis=0)
        flat = xmax - xmin < SIGMA_FLOOR
        if flat.any():
            warnings.warn(f"{int(flat.sum())} zero-range channels under min-max; "
                          "range floored", RuntimeWarning)
            xmax = np.where(flat, xmin + SIGMA_FLOOR, xmax)
        return StandardizationStats(scheme="min-max", xmin=xmin, xmax=xmax)
    sigma = pooled.std(axis=0)
    dead = sigma < SIGMA_FLOOR
    if dead.any():
        warnings.warn(f"{int(dead.sum())} zero-variance channels; sigma floored "
                      f"at {SIGMA_FLOOR}", RuntimeWarning)
        sigma = np.where(dead, SIGMA_FLOOR, sigma)
    if scheme == "standard":
        return StandardizationStats(scheme="standard", mu=mu, sigma=sigma)
    return StandardizationStats(scheme="avg-std", mu=mu, sigma=sigma,
                                sigma_avg=float(sigma.mean()))


def _check_channels(clip: MotionClip, stats: StandardizationStats):
    chans = stats.channels
    if chans is not None and chans != clip.joints * 3:
        raise ValueError(f"stats have {chans} channels, clip has {clip.joints * 3}")


def _apply(clip: MotionClip, stats: StandardizationStats, inverse: bool) -> MotionClip:
    _check_channels(clip, stats)
    if stats.scheme == "none":
        return clip
    flat = clip.positions.astype(np.float64).reshape(clip.frames, clip.agents, -1)
    if stats.scheme == "standard":
        flat = flat * stats.sigma + stats.mu if inverse else (flat - stats.mu) / stats.sigma
    elif stats.scheme == "avg-std":
        flat = flat * stats.sigma_avg + stats.mu if inverse else (flat - stats.mu) / stats.sigma_avg
    else:  # min-max
        rng = stats.xmax - stats.xmin
        flat = flat * rng + stats.xmin if inverse else (flat - stats.xmin) / rng
    out = flat.reshape(clip.positions.shape)
    return MotionClip(positions=out, fps=clip.fps)


def standardize(clip: MotionClip, stats: StandardizationStats) -> MotionClip:
    return _apply(clip, stats, inverse=False)


def destandardize(clip: MotionClip, stats: StandardizationStats) -> MotionClip:
    return _apply(clip, stats, inverse=True)
