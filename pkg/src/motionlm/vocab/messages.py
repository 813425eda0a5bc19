"""Motion messages: instruction / conditions / reply as one token
sequence, plus loss masks.

Layout:
  [INSTR_BOS] instr [INSTR_EOS]
  [COND_BOS] part* [COND_EOS]
  [REPLY_BOS] part* [REPLY_EOS]

where each part wraps its payload in kind-specific delimiters and
motion-typed parts separate agents with [AGENT_SEP]. SFT loss masks
score only the tokens after [REPLY_BOS], including [REPLY_EOS];
pretrain masks score everything (padding is added later by batching and
is never scored).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .vocabulary import Vocabulary, MAX_AGENTS


class MessageError(ValueError):
    """Message violates its task contract (missing condition, bad reply)."""


# ------------------------------------------------------------------ parts

@dataclass(frozen=True)
class Part:
    kind = "abstract"


@dataclass(frozen=True)
class CaptionPart(Part):
    text: str
    kind = "caption"


@dataclass(frozen=True)
class AudioPart(Part):
    codes: tuple
    kind = "audio"

    def __init__(self, codes):
        object.__setattr__(self, "codes", tuple(int(c) for c in codes))


@dataclass(frozen=True)
class MotionPart(Part):
    agents: tuple          # tuple per agent of motion-code tuples
    kind = "motion"

    def __init__(self, agents):
        object.__setattr__(
            self, "agents", tuple(tuple(int(c) for c in a) for a in agents))


@dataclass(frozen=True)
class PastMotionPart(MotionPart):
    kind = "past_motion"


@dataclass(frozen=True)
class FutureMotionPart(MotionPart):
    kind = "future_motion"


@dataclass(frozen=True)
class DurationPart(Part):
    text: str
    kind = "duration"

    @classmethod
    def of(cls, seconds: float) -> "DurationPart":
        return cls(text=repr(round(float(seconds), 4)))

    @property
    def seconds(self) -> Optional[float]:
        try:
            return float(self.text)
        except ValueError:
            return None


@dataclass(frozen=True)
class HeadcountPart(Part):
    text: str
    kind = "headcount"

    @classmethod
    def of(cls, n: int) -> "HeadcountPart":
        return cls(text=str(int(n)))

    @property
    def count(self) -> Optional[int]:
        try:
            return int(self.text)
        except ValueError:
            return None


@dataclass(frozen=True)
class GenrePart(Part):
    text: str
    kind = "genre"


PART_DELIMS = {
    "caption": ("[TEXT_BOS]", "[TEXT_EOS]"),
    "audio": ("[AUDIO_BOS]", "[AUDIO_EOS]"),
    "motion": ("[MOT_BOS]", "[MOT_EOS]"),
    "duration": ("[DUR_BOS]", "[DUR_EOS]"),
    "headcount": ("[COUNT_BOS]", "[COUNT_EOS]"),
    "genre": ("[GENRE_BOS]", "[GENRE_EOS]"),
    "past_motion": ("[PAST_BOS]", "[PAST_EOS]"),
    "future_motion": ("[FUT_BOS]", "[FUT_EOS]"),
}
TEXT_LIKE = ("caption", "duration", "headcount", "genre")
MOTION_LIKE = ("motion", "past_motion", "future_motion")
REPLY_KINDS = ("caption", "audio", "motion")


# ------------------------------------------------------------- task table

@dataclass(frozen=True)
class TaskSpec:
    name: str
    instructions: tuple          # template pool; [0] is the canonical one
    required: tuple              # condition kinds, in order
    optional: tuple
    reply: tuple                 # reply kinds, in order


TASKS = {t.name: t for t in (
    TaskSpec("t2m",
             ("Generate a motion sequence based on the user's caption.",
              "Produce a motion matching this description.",
              "Create the motion the caption describes."),
             ("caption",), ("duration",), ("motion",)),
    TaskSpec("n2tm",
             ("Randomly synthesize a motion sequence and its caption.",
              "Invent a motion and describe it.",
              "Produce an unconditioned motion with a caption."),
             (), ("duration",), ("motion", "caption")),
    TaskSpec("m-t2m",
             ("Generate a motion sequence with a specified number of participants.",
              "Create a group motion for the given caption and headcount.",
              "Produce a multi-person motion matching the description."),
             ("caption", "headcount"), ("duration",), ("motion",)),
    TaskSpec("m2t",
             ("Describe the given motion.",
              "Write a caption for this motion.",
              "Summarize the motion in words."),
             ("motion",), (), ("caption",)),
    TaskSpec("m-m2t",
             ("What are the persons doing?",
              "Describe what the group is doing.",
              "Caption this multi-person motion."),
             ("motion", "headcount"), (), ("caption",)),
    TaskSpec("m-n2tm",
             ("Randomly generate a motion sequence with a specified number of participants.",
              "Invent a group motion for the given headcount and describe it.",
              "Produce an unconditioned multi-person motion with a caption."),
             ("headcount",), ("duration",), ("caption", "motion")),
    TaskSpec("s2g",
             ("Add body movements to this speech.",
              "Generate gestures for the speech audio.",
              "Produce gesture motion matching the speech."),
             ("audio",), ("caption",), ("motion",)),
    TaskSpec("g2s",
             ("Infer the speech audio based on the gestures.",
              "Reconstruct speech that fits these gestures.",
              "Produce audio matching the gesture motion."),
             ("motion",), (), ("audio",)),
    TaskSpec("n2sg",
             ("Randomly generate speech and corresponding body movements.",
              "Invent speech audio together with gestures.",
              "Produce unconditioned speech and gesture motion."),
             (), ("duration", "caption"), ("audio", "motion")),
    TaskSpec("m2d",
             ("Dance to the given music.",
              "Generate a dance for this music.",
              "Choreograph motion matching the audio."),
             ("audio",), ("caption", "genre"), ("motion",)),
    TaskSpec("d2m",
             ("Add background music to this dance.",
              "Compose music that fits the dance motion.",
              "Produce audio matching this dance."),
             ("motion",), ("genre",), ("audio",)),
    TaskSpec("n2dm",
             ("Compose a piece of music and pair it with a dance.",
              "Invent music together with a matching dance.",
              "Produce unconditioned music and dance motion."),
             (), ("duration", "genre"), ("audio", "motion")),
    TaskSpec("pred",
             ("Predict future frames from past motion.",
              "Continue the motion sequence.",
              "Extrapolate the motion forward in time."),
             ("past_motion",), ("duration", "caption"), ("motion",)),
    TaskSpec("btwn",
             ("Interpolate missing frames between two motion segments.",
              "Fill in the motion between the given segments.",
              "Generate the transition connecting past and future motion."),
             ("past_motion", "future_motion"), ("duration", "caption"), ("motion",)),
)}

_INSTRUCTION_TO_TASK = {}
for _spec in TASKS.values():
    for _tpl in _spec.instructions:
        _INSTRUCTION_TO_TASK[_tpl] = _spec.name


def task_for_instruction(instruction: str) -> Optional[str]:
    return _INSTRUCTION_TO_TASK.get(instruction)


# ------------------------------------------------------------ the message

@dataclass(frozen=True)
class MotionMessage:
    task: str
    instruction: str
    conditions: tuple
    reply: tuple

    def __init__(self, task, instruction, conditions, reply):
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "instruction", instruction)
        object.__setattr__(self, "conditions", tuple(conditions))
        object.__setattr__(self, "reply", tuple(reply))

    def validate(self) -> None:
        spec = TASKS.get(self.task)
        if spec is None:
            raise MessageError(f"unknown task {self.task!r}")
        have = [p.kind for p in self.conditions]
        for kind in spec.required:
            if kind not in have:
                raise MessageError(f"{self.task}: missing required condition {kind!r}")
        allowed = set(spec.required) | set(spec.optional)
        for kind in have:
            if kind not in allowed:
                raise MessageError(f"{self.task}: condition {kind!r} not allowed")
        reply_kinds = tuple(p.kind for p in self.reply)
        if reply_kinds != spec.reply:
            raise MessageError(
                f"{self.task}: reply kinds {reply_kinds} != expected {spec.reply}")
        headcount = next((p.count for p in self.conditions
                          if isinstance(p, HeadcountPart)), None)
        if headcount is not None:
            for p in list(self.conditions) + list(self.reply):
                if isinstance(p, MotionPart) and len(p.agents) != headcount:
                    raise MessageError(
                        f"{self.task}: motion part has {len(p.agents)} agents, "
                        f"headcount says {headcount}")
        for p in list(self.conditions) + list(self.reply):
            if isinstance(p, MotionPart) and len(p.agents) > MAX_AGENTS:
                raise MessageError(f"too many agents (> {MAX_AGENTS})")


# ---------------------------------------------------------------- encoding

def _encode_part(part: Part, vocab: Vocabulary) -> List[int]:
    bos, eos = PART_DELIMS[part.kind]
    out = [vocab.special[bos]]
    if part.kind in TEXT_LIKE:
        out += vocab.text.tokenize(part.text)
    elif part.kind == "audio":
        out += [vocab.audio_id(c) for c in part.codes]
    else:
        for i, agent in enumerate(part.agents):
            if i:
                out.append(vocab.special["[AGENT_SEP]"])
            out += [vocab.motion_id(c) for c in agent]
    out.append(vocab.special[eos])
    return out


def encode_message(msg: MotionMessage, vocab: Vocabulary,
                   mode: str = "sft") -> Tuple[np.ndarray, np.ndarray]:
    """Message -> (token ids, loss mask). mode 'pretrain' scores every
    position; 'sft' scores only reply tokens (after [REPLY_BOS],
    including [REPLY_EOS])."""
    if mode not in ("pretrain", "sft"):
        raise ValueError(f"unknown mask mode {mode!r}")
    msg.validate()
    sp = vocab.special
    ids = [sp["[INSTR_BOS]"]]
    ids += vocab.text.tokenize(msg.instruction)
    ids.append(sp["[INSTR_EOS]"])
    ids.append(sp["[COND_BOS]"])
    for part in msg.conditions:
        ids += _encode_part(part, vocab)
    ids.append(sp["[COND_EOS]"])
    reply_bos_pos = len(ids)
    ids.append(sp["[REPLY_BOS]"])
    for part in msg.reply:
        ids += _encode_part(part, vocab)
    ids.append(sp["[REPLY_EOS]"])
    ids = np.asarray(ids, dtype=np.int64)
    if mode == "pretrain":
        mask = np.ones(len(ids), dtype=bool)
    else:
        mask = np.zeros(len(ids), dtype=bool)
        mask[reply_bos_pos + 1:] = True
    return ids, mask


def encode_prefix(msg: MotionMessage, vocab: Vocabulary) -> np.ndarray:
    """Everything up to and including [REPLY_BOS] (generation prompt)."""
    ids, _ = encode_message(msg, vocab)
    reply_bos = vocab.special["[REPLY_BOS]"]
    cut = int(np.nonzero(ids == reply_bos)[0][0]) + 1
    return ids[:cut]


def parse_message(ids, vocab: Vocabulary) -> MotionMessage:
    """Strict inverse of encode_message (delegates to the grammar)."""
    from .grammar import MessageGrammar
    return MessageGrammar(vocab).parse(ids)
