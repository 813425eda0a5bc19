"""Assemble task-shaped messages from raw sample material."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .messages import (
    MotionMessage, CaptionPart, AudioPart, MotionPart, PastMotionPart,
    FutureMotionPart, DurationPart, HeadcountPart, GenrePart,
    TASKS, MessageError,
)


@dataclass
class RawParts:
    """Everything a sample can offer; tasks pick what they need."""
    caption: Optional[str] = None
    motion: Optional[list] = None          # per-agent code lists
    audio: Optional[list] = None           # audio codes
    duration: Optional[float] = None
    genre: Optional[str] = None
    past_motion: Optional[list] = None
    future_motion: Optional[list] = None

    @property
    def headcount(self) -> Optional[int]:
        return len(self.motion) if self.motion is not None else None


def _make_part(kind: str, raw: RawParts):
    if kind == "caption" and raw.caption is not None:
        return CaptionPart(raw.caption)
    if kind == "motion" and raw.motion is not None:
        return MotionPart(raw.motion)
    if kind == "audio" and raw.audio is not None:
        return AudioPart(raw.audio)
    if kind == "duration" and raw.duration is not None:
        return DurationPart.of(raw.duration)
    if kind == "headcount" and raw.headcount is not None:
        return HeadcountPart.of(raw.headcount)
    if kind == "genre" and raw.genre is not None:
        return GenrePart(raw.genre)
    if kind == "past_motion" and raw.past_motion is not None:
        return PastMotionPart(raw.past_motion)
    if kind == "future_motion" and raw.future_motion is not None:
        return FutureMotionPart(raw.future_motion)
    return None


def build_task_sample(task: str, raw: RawParts, rng,
                      p_optional: float = 0.5) -> MotionMessage:
    """Required conditions always included; optional ones independently
    with probability p_optional; instruction drawn from the task pool."""
    spec = TASKS.get(task)
    if spec is None:
        raise MessageError(f"unknown task {task!r}")
    instruction = spec.instructions[int(rng.integers(len(spec.instructions)))]
    conditions = []
    for kind in spec.required:
        part = _make_part(kind, raw)
        if part is None:
            raise MessageError(f"{task}: raw parts lack required {kind!r}")
        conditions.append(part)
    for kind in spec.optional:
        part = _make_part(kind, raw)
        if part is not None and rng.random() < p_optional:
            conditions.append(part)
    reply = []
    for kind in spec.reply:
        part = _make_part(kind, raw)
        if part is None:
            raise MessageError(f"{task}: raw parts lack reply {kind!r}")
        reply.append(part)
    msg = MotionMessage(task=task, instruction=instruction,
                        conditions=conditions, reply=reply)
    msg.validate()
    return msg
