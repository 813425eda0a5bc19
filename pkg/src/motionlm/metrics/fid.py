"""Frechet distance between Gaussian feature fits.

fid = ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2)), with the
matrix square root computed as sqrt(Sa)^T Sb sqrt(Sa) via symmetric
eigendecomposition (stabler than the direct product root). Slightly
negative eigenvalues within tolerance are clamped to zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EIG_TOL = 1e-8
SYM_TOL = 1e-6


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (len(mean), len(mean)):
            raise ValueError(f"need mean [d] and cov [d, d], got {mean.shape}/{cov.shape}")
        asym = np.abs(cov - cov.T).max(initial=0.0)
        if asym > SYM_TOL * max(1.0, np.abs(cov).max(initial=0.0)):
            raise ValueError(f"covariance asymmetric beyond tolerance ({asym:.2e})")
        cov = (cov + cov.T) / 2.0
        eig = np.linalg.eigvalsh(cov)
        scale = max(1.0, float(eig.max(initial=0.0)))
        if eig.min(initial=0.0) < -EIG_TOL * scale:
            raise ValueError(f"covariance not PSD (min eigenvalue {eig.min():.2e})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return len(self.mean)

    @classmethod
    def fit(cls, features: np.ndarray) -> "GaussianStats":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 2:
            raise ValueError("need at least two feature rows")
        return cls(mean=features.mean(axis=0), cov=np.cov(features, rowvar=False))


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(a: GaussianStats, b: GaussianStats) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    root_a = _sqrtm_psd(a.cov)
    inner = root_a @ b.cov @ root_a
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    vals = np.where(vals > -EIG_TOL * scale, np.clip(vals, 0.0, None), vals)
    if (vals < 0).any():
        raise ValueError(f"product matrix far from PSD (min eig {vals.min():.2e})")
    trace_root = float(np.sqrt(vals).sum())
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * trace_root)
    return max(value, 0.0)
