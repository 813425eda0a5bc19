"""Motion clip container and binary clip I/O.

Wire format ("MOTC"): magic, u32 version=1, u32 frames, u32 agents,
u32 joints, f32 fps, then frames*agents*joints*3 little-endian f32
positions, frame-major (frame, agent, joint, xyz). In memory positions
are float64 (matching the training kernel); the payload is float32, so
write(read(path)) reproduces the original bytes exactly.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MOTC"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIf")


class ClipFormatError(ValueError):
    """Malformed clip file: bad magic/header, payload mismatch, non-finite data."""


@dataclass(frozen=True)
class MotionClip:
    positions: np.ndarray  # [frames, agents, joints, 3] float64, meters
    fps: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 4 or pos.shape[3] != 3:
            raise ValueError(f"positions must be [frames, agents, joints, 3], got {pos.shape}")
        if pos.shape[0] < 1 or pos.shape[1] < 1 or pos.shape[2] < 2:
            raise ValueError(f"need frames>=1, agents>=1, joints>=2, got {pos.shape}")
        if not np.isfinite(pos).all():
            raise ValueError("positions contain non-finite values")
        if not (self.fps > 0):
            raise ValueError(f"fps must be positive, got {self.fps}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    @property
    def agents(self) -> int:
        return self.positions.shape[1]

    @property
    def joints(self) -> int:
        return self.positions.shape[2]

    @property
    def duration(self) -> float:
        return self.frames / self.fps

    def agent(self, index: int) -> np.ndarray:
        """Positions of one agent, [frames, joints, 3]."""
        return self.positions[:, index]

    def with_positions(self, positions: np.ndarray) -> "MotionClip":
        return MotionClip(positions=positions, fps=self.fps)


def write_clip(clip: MotionClip, path) -> None:
    header = _HEADER.pack(MAGIC, VERSION, clip.frames, clip.agents, clip.joints, clip.fps)
    payload = np.ascontiguousarray(clip.positions, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_clip(path) -> MotionClip:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ClipFormatError(f"{path}: file shorter than header")
    magic, version, frames, agents, joints, fps = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ClipFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ClipFormatError(f"{path}: unsupported version {version}")
    expected = frames * agents * joints * 3 * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise ClipFormatError(
            f"{path}: payload length {len(payload)} != expected {expected}"
        )
    pos = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(frames, agents, joints, 3)
    if not np.isfinite(pos).all():
        raise ClipFormatError(f"{path}: non-finite positions")
    try:
        return MotionClip(positions=pos, fps=fps)
    except ValueError as exc:
        raise ClipFormatError(f"{path}: {exc}") from exc


def resample(clip: MotionClip, target_fps: float) -> MotionClip:
    """Per-channel linear resampling; duration (frames/fps) preserved
    within one output-frame period."""
    if not (target_fps > 0):
        raise ValueError(f"target_fps must be positive, got {target_fps}")
    if abs(target_fps - clip.fps) < 1e-12 * max(1.0, clip.fps):
        return MotionClip(positions=clip.positions.copy(), fps=clip.fps)
    n_out = max(1, int(round(clip.frames * target_fps / clip.fps)))
    if clip.frames == 1:
        return MotionClip(positions=np.repeat(clip.positions, n_out, axis=0),
                          fps=target_fps)
    src = np.arange(n_out, dtype=np.float64) * (clip.fps / target_fps)
    lo = np.floor(src + 1e-9).astype(np.int64)
    # output times may run past the last source sample (duration is
    # frames/fps); extend the final segment linearly rather than clamping
    lo = np.clip(lo, 0, clip.frames - 2)
    frac = src - lo
    frac[np.abs(frac) < 1e-9] = 0.0
    pos = clip.positions
    out = pos[lo] * (1.0 - frac)[:, None, None, None] + pos[lo + 1] * frac[:, None, None, None]
    return MotionClip(positions=out, fps=target_fps)


def truncate(clip: MotionClip, max_seconds: float) -> MotionClip:
    """Keep at most floor(max_seconds * fps) leading frames."""
    if not (max_seconds > 0):
        raise ValueError(f"max_seconds must be positive, got {max_seconds}")
    cap = int(np.floor(max_seconds * clip.fps + 1e-9))
    if cap < 1:
        raise ValueError(f"max_seconds {max_seconds} shorter than one frame at {clip.fps} fps")
    if cap >= clip.frames:
        return clip
    return MotionClip(positions=clip.positions[:cap].copy(), fps=clip.fps)
