"""Multitask message corpus built from tokenized synthetic clips.

Each clip contributes one sample per applicable task: text/motion tasks
for every clip, music tasks where a beat track exists, speech tasks via
a deterministic motion-energy audio stub, multi-agent variants when
agents > 1, and prediction/in-between from temporal splits of the code
stream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..data import MotionClip
from ..vocab import RawParts, build_task_sample, MotionMessage

AUDIO_STUB_RATE = 8.0           # tokens per second
AUDIO_STUB_LEVELS = 16


def audio_stub_from_beats(beats, duration: float) -> List[int]:
    """Beat track -> sparse onset grid (code 1 on beat cells, 0 elsewhere)."""
    n = max(1, int(round(duration * AUDIO_STUB_RATE)))
    cells = np.zeros(n, dtype=np.int64)
    for b in beats:
        k = int(b * AUDIO_STUB_RATE)
        if 0 <= k < n:
            cells[k] = 1
    return cells.tolist()


def audio_stub_from_motion(clip: MotionClip) -> List[int]:
    """Quantized mean joint speed per cell; a deterministic speech proxy."""
    vel = np.linalg.norm(np.diff(clip.positions, axis=0), axis=-1) * clip.fps
    speed = vel.mean(axis=(1, 2))
    n = max(1, int(round(clip.duration * AUDIO_STUB_RATE)))
    cells = np.zeros(n, dtype=np.int64)
    per = max(1, int(round(clip.fps / AUDIO_STUB_RATE)))
    for k in range(n):
        window = speed[k * per:(k + 1) * per]
        level = window.mean() if len(window) else 0.0
        cells[k] = min(AUDIO_STUB_LEVELS - 1, int(level / 2.0 * AUDIO_STUB_LEVELS)) + 2
    return cells.tolist()


@dataclass
class CorpusSample:
    message: MotionMessage
    family: Optional[str] = None


def _tasks_for(entry_family: str, agents: int, has_beats: bool) -> List[str]:
    tasks = ["t2m", "m2t", "n2tm", "pred", "btwn", "s2g", "g2s", "n2sg"]
    if has_beats:
        tasks += ["m2d", "d2m", "n2dm"]
    if agents > 1:
        tasks += ["m-t2m", "m-m2t", "m-n2tm"]
    return tasks


def build_corpus(clips, captions, families, beat_tracks, tokenizer,
                 seed: int = 0, p_optional: float = 0.5,
                 genres=None) -> List[CorpusSample]:
    """Tokenize clips and expand each into its applicable task messages."""
    rng = np.random.default_rng([seed, 909])
    samples = []
    for i, clip in enumerate(clips):
        enc = tokenizer.encode(clip)
        codes = [list(agent) for agent in
                 (enc.codes if enc.codes.ndim == 2 else enc.codes[..., 0])]
        beats = beat_tracks[i] or []
        duration = clip.duration
        n = len(codes[0])
        third, half = max(1, n // 3), max(1, n // 2)
        music = audio_stub_from_beats(beats, duration) if beats else None
        speech = audio_stub_from_motion(clip)
        genre = genres[i] if genres else None
        for task in _tasks_for(families[i], clip.agents, bool(beats)):
            raw = RawParts(caption=captions[i], motion=codes, duration=duration,
                           genre=genre)
            if task in ("s2g", "g2s", "n2sg"):
                raw.audio = speech
            elif task in ("m2d", "d2m", "n2dm"):
                raw.audio = music
            if task == "pred":
                raw.past_motion = [c[:half] for c in codes]
                raw.motion = [c[half:] or c[:1] for c in codes]
            elif task == "btwn":
                raw.past_motion = [c[:third] for c in codes]
                raw.future_motion = [c[-third:] for c in codes]
                raw.motion = [c[third:-third] or c[:1] for c in codes]
            msg = build_task_sample(task, raw, rng, p_optional=p_optional)
            samples.append(CorpusSample(message=msg, family=families[i]))
    return samples
