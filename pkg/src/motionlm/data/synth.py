"""Synthetic motion families with captions and beat tracks.

Each family is a pure function of (family args, seed, frames, agents,
joints, fps). Captions come from per-family template pools; the dance
family emits a beat track whose onsets coincide with joint-speed peaks.
"""
from __future__ import annotations

import re
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .clips import MotionClip

_FAMILY_IDS = {"still": 0, "wave": 1, "walk": 2, "spin": 3, "bow": 4, "dance": 5}

_CAPTIONS = {
    "still": [
        "a person stands still",
        "someone stands motionless in place",
        "a person holds a static pose",
    ],
    "wave": [
        "a person waves their hand",
        "someone waves at a friend",
        "a person raises a hand and waves",
    ],
    "walk": [
        "a person walks forward",
        "someone walks straight ahead at a steady pace",
        "a person strolls forward",
    ],
    "spin": [
        "a person spins around in place",
        "someone turns around on the spot",
        "a person rotates their whole body",
    ],
    "bow": [
        "a person bows politely",
        "someone bends forward in a bow",
        "a person bows and straightens up again",
    ],
    "dance": [
        "a person dances to the beat",
        "someone dances side to side with the music",
        "a person performs a rhythmic dance",
    ],
}

_GENRES = ["pop", "waltz", "hiphop", "folk"]


def _rest_pose(joints: int) -> np.ndarray:
    """Deterministic standing pose: root, hips, spine/head column, hands,
    remaining joints on a small helix around the spine."""
    pose = np.zeros((joints, 3))
    pose[0] = (0.0, 1.0, 0.0)                      # root
    if joints > 1:
        pose[1] = (-0.10, 0.90, 0.0)               # left hip
    if joints > 2:
        pose[2] = (0.10, 0.90, 0.0)                # right hip
    if joints > 3:
        pose[3] = (0.0, 1.25, 0.0)                 # spine
    if joints > 4:
        pose[4] = (0.0, 1.55, 0.0)                 # head
    if joints > 5:
        pose[5] = (-0.45, 1.20, 0.0)               # left hand
    if joints > 6:
        pose[6] = (0.45, 1.20, 0.0)                # right hand
    if joints > 7:
        pose[7] = (0.0, 0.05, 0.0)                 # foot proxy
    for j in range(8, joints):
        a = 2 * np.pi * (j - 8) / max(1, joints - 8)
        pose[j] = (0.2 * np.cos(a), 0.6 + 0.5 * (j - 8) / max(1, joints - 8), 0.2 * np.sin(a))
    return pose


def _agent_offsets(agents: int) -> np.ndarray:
    """Spread agents along x, one meter apart, centered."""
    xs = (np.arange(agents) - (agents - 1) / 2.0) * 1.0
    out = np.zeros((agents, 3))
    out[:, 0] = xs
    return out


def _base(frames: int, agents: int, joints: int) -> np.ndarray:
    pose = _rest_pose(joints)
    offs = _agent_offsets(agents)
    return pose[None, None] + offs[None, :, None, :] + np.zeros((frames, 1, 1, 3))


def _gen_still(rng, t, pos, **_):
    return pos, []


def _gen_wave(rng, t, pos, **_):
    joints = pos.shape[2]
    hand = 6 if joints > 6 else joints - 1
    freq = rng.uniform(1.0, 2.0)
    phase = rng.uniform(0, 2 * np.pi)
    amp = rng.uniform(0.10, 0.20)
    pos[:, :, hand, 0] += amp * np.sin(2 * np.pi * freq * t + phase)[:, None]
    pos[:, :, hand, 1] += 0.25 + 0.5 * amp * np.cos(2 * np.pi * freq * t + phase)[:, None]
    return pos, []


def _gen_walk(rng, t, pos, **_):
    joints = pos.shape[2]
    speed = rng.uniform(0.8, 1.4)
    stride = rng.uniform(1.5, 2.2)
    pos[..., 2] += (speed * t)[:, None, None]
    bob = 0.04 * np.abs(np.sin(np.pi * stride * t))
    pos[..., 1] += bob[:, None, None]
    if joints > 7:
        pos[:, :, 7, 2] += 0.3 * np.sin(2 * np.pi * stride * t / 2.0)[:, None]
    return pos, []


def _gen_spin(rng, t, pos, **_):
    turns = rng.uniform(0.5, 1.5)
    total = t[-1] - t[0] if len(t) > 1 else 1.0
    theta = 2 * np.pi * turns * t / max(total, 1e-9)
    c, s = np.cos(theta), np.sin(theta)
    centers = pos[:, :, 0:1, :].copy()
    centers[..., 1] = 0.0
    rel = pos - centers
    x, z = rel[..., 0].copy(), rel[..., 2].copy()
    rel[..., 0] = c[:, None, None] * x + s[:, None, None] * z
    rel[..., 2] = -s[:, None, None] * x + c[:, None, None] * z
    return rel + centers, []


def _gen_bow(rng, t, pos, **_):
    joints = pos.shape[2]
    freq = rng.uniform(0.25, 0.5)
    depth = rng.uniform(0.2, 0.4)
    bend = depth * (1 - np.cos(2 * np.pi * freq * t)) / 2.0
    for j in (3, 4):
        if joints > j:
            height = pos[0, 0, j, 1] - pos[0, 0, 0, 1]
            pos[:, :, j, 2] += bend[:, None] * height
            pos[:, :, j, 1] -= 0.5 * bend[:, None] * height
    return pos, []


def _gen_dance(rng, t, pos, duration: float = 1.0, beat_hz: float = 2.0, **_):
    """Whole-body sways whose speed peaks sit exactly on the beat grid.

    Each beat contributes a smoothstep displacement along alternating x
    directions; its time derivative is a bump centered on the beat.
    """
    beats = []
    k = 0
    while (k + 0.5) / beat_hz < duration - 1e-9:
        beats.append((k + 0.5) / beat_hz)
        k += 1
    width = 1.0 / (6.0 * beat_hz)
    amp = rng.uniform(0.2, 0.35)
    shift = np.zeros_like(t)
    for i, b in enumerate(beats):
        sign = 1.0 if i % 2 == 0 else -1.0
        shift = shift + sign * amp * 0.5 * (1 + np.tanh((t - b) / width))
    pos[..., 0] += shift[:, None, None]
    return pos, beats


_GENERATORS: Dict[str, Callable] = {
    "still": _gen_still,
    "wave": _gen_wave,
    "walk": _gen_walk,
    "spin": _gen_spin,
    "bow": _gen_bow,
    "dance": _gen_dance,
}

SYNTH_FAMILIES = tuple(_GENERATORS)

_FAMILY_RE = re.compile(r"^([a-z]+)(?:\(([-+0-9.eE]+)\))?$")


def parse_family(label: str) -> Tuple[str, dict]:
    """Split a family label like "dance(2.0)" into name and kwargs."""
    m = _FAMILY_RE.match(label.strip())
    if not m or m.group(1) not in _GENERATORS:
        raise ValueError(f"unknown synth family {label!r}")
    name, arg = m.group(1), m.group(2)
    kwargs = {}
    if arg is not None:
        if name != "dance":
            raise ValueError(f"family {name!r} takes no parameter")
        kwargs["beat_hz"] = float(arg)
    return name, kwargs


def synth_generate(family: str, seed: int, frames: int, agents: int,
                   joints: int, fps: float):
    """Generate (MotionClip, caption, beat track) for a named family.

    Deterministic in all arguments; the dance family's beat onsets line
    up with the peaks of its mean joint-speed profile.
    """
    name, kwargs = parse_family(family)
    if joints < 3:
        raise ValueError("synthetic families need joints >= 3 (root + both hips)")
    rng = np.random.default_rng(
        [seed, frames, agents, joints, int(round(fps * 1000)), _FAMILY_IDS[name]]
    )
    t = np.arange(frames, dtype=np.float64) / fps
    pos = _base(frames, agents, joints)
    pos, beats = _GENERATORS[name](rng, t, pos, duration=frames / fps, **kwargs)
    templates = _CAPTIONS[name]
    caption = templates[rng.integers(len(templates))]
    if agents > 1:
        caption = f"{agents} people together: {caption}"
    clip = MotionClip(positions=pos, fps=fps)
    return clip, caption, list(beats)


def synth_genre(rng) -> str:
    return _GENRES[rng.integers(len(_GENRES))]
