"""Pluggable motion/text embedders for the retrieval-style metrics.

The oracle embedder classifies the synthetic family from the motion
signal (or caption keywords) and emits a one-hot with a small
content-seeded perturbation; the random-projection embedder projects
fixed summary statistics through a seeded Gaussian matrix. Both are
deterministic functions of their inputs.
"""
from __future__ import annotations

import hashlib

import numpy as np

from ..data import MotionClip

FAMILY_ORDER = ("still", "wave", "walk", "spin", "bow", "dance")

_CAPTION_KEYS = (
    ("dance", ("danc", "rhythm", "beat", "music")),
    ("spin", ("spin", "turn", "rotat")),
    ("bow", ("bow", "bend")),
    ("wave", ("wave", "waving")),
    ("walk", ("walk", "stroll", "stride", "ahead")),
    ("still", ("still", "motionless", "static", "stand")),
)


def classify_caption_family(caption: str) -> str:
    low = caption.lower()
    for family, keys in _CAPTION_KEYS:
        if any(k in low for k in keys):
            return family
    return "still"


def classify_motion_family(clip: MotionClip) -> str:
    """Heuristic family detector for the synthetic corpus."""
    pos = clip.positions[:, 0]                     # lead agent, [T, J, 3]
    vel = np.diff(pos, axis=0) * clip.fps
    speed = np.linalg.norm(vel, axis=-1).mean(axis=-1)
    if speed.max(initial=0.0) < 1e-6:
        return "still"
    root = pos[:, 0]
    net_z = root[-1, 2] - root[0, 2]
    duration = clip.frames / clip.fps
    # heading swing from the hip axis
    hip_axis = pos[:, 2] - pos[:, 1]
    heading = np.unwrap(np.arctan2(hip_axis[:, 2], hip_axis[:, 0]))
    if abs(heading[-1] - heading[0]) > np.pi / 2:
        return "spin"
    if net_z > 0.4 * duration:
        return "walk"
    root_x = root[:, 0] - root[:, 0].mean()
    if np.abs(root_x).max() > 0.05:
        return "dance"
    if clip.joints > 4:
        head_z = pos[:, 4, 2]
        if head_z.max() - head_z.min() > 0.08:
            return "bow"
    return "wave"


def _content_seed(data: bytes) -> np.random.Generator:
    digest = hashlib.sha256(data).digest()
    return np.random.default_rng(list(digest[:8]))


class OracleEmbedder:
    """Family one-hot (scaled) plus small content-seeded noise."""

    def __init__(self, dim: int = 16, noise: float = 0.05):
        if dim < len(FAMILY_ORDER):
            raise ValueError(f"dim must be >= {len(FAMILY_ORDER)}")
        self.dim = dim
        self.noise = noise

    def _embed(self, family: str, payload: bytes) -> np.ndarray:
        out = np.zeros(self.dim)
        out[FAMILY_ORDER.index(family)] = 1.0
        out += self.noise * _content_seed(payload).normal(size=self.dim)
        return out

    def embed_motion(self, clip: MotionClip) -> np.ndarray:
        family = classify_motion_family(clip)
        return self._embed(family, clip.positions.tobytes())

    def embed_text(self, caption: str) -> np.ndarray:
        family = classify_caption_family(caption)
        return self._embed(family, caption.encode("utf-8"))


def _motion_summary(clip: MotionClip) -> np.ndarray:
    """Fixed-length (64) motion statistics regardless of joint count."""
    pos = clip.positions.reshape(clip.frames, -1, 3)
    vel = np.diff(pos, axis=0) * clip.fps if clip.frames > 1 else np.zeros_like(pos[:1])
    speed = np.linalg.norm(vel, axis=-1)
    feats = [
        pos.mean(axis=(0, 1)), pos.std(axis=(0, 1)),
        pos.min(axis=(0, 1)), pos.max(axis=(0, 1)),
        vel.mean(axis=(0, 1)), vel.std(axis=(0, 1)),
        [speed.mean(), speed.std(), speed.max(initial=0.0)],
        [clip.duration, float(clip.positions[..., 1].min()),
         float(clip.positions[..., 1].max())],
    ]
    flat = np.concatenate([np.atleast_1d(np.asarray(f, dtype=np.float64)).ravel()
                           for f in feats])
    out = np.zeros(64)
    out[:min(64, len(flat))] = flat[:64]
    return out


def velocity_stats_features(clip: MotionClip) -> np.ndarray:
    """Kinetic-style per-joint velocity statistics (desk stand-in for
    learned kinetic feature extractors)."""
    pos = clip.positions.reshape(clip.frames, -1, 3)
    if clip.frames < 2:
        return np.zeros(3 * pos.shape[1])
    vel = np.diff(pos, axis=0) * clip.fps
    speed = np.linalg.norm(vel, axis=-1)           # [T-1, J*agents]
    acc = np.abs(np.diff(speed, axis=0)).mean(axis=0) if clip.frames > 2 else \
        np.zeros(speed.shape[1])
    return np.concatenate([speed.mean(axis=0), speed.std(axis=0), acc])


class RandomProjectionEmbedder:
    """Seeded Gaussian projection of summary statistics."""

    def __init__(self, dim: int = 32, seed: int = 0):
        self.dim = dim
        rng = np.random.default_rng([seed, 2222])
        self._motion_proj = rng.normal(0, 1 / np.sqrt(64), size=(64, dim))
        self._text_proj = rng.normal(0, 1 / np.sqrt(64), size=(64, dim))

    def embed_motion(self, clip: MotionClip) -> np.ndarray:
        return _motion_summary(clip) @ self._motion_proj

    def embed_text(self, caption: str) -> np.ndarray:
        counts = np.zeros(64)
        data = caption.lower().encode("utf-8")
        for i in range(len(data) - 2):
            h = int.from_bytes(hashlib.blake2b(data[i:i + 3], digest_size=2).digest(),
                               "little")
            counts[h % 64] += 1.0
        return counts @ self._text_proj
