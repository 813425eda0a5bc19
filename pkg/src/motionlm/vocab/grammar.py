"""Incremental message grammar: token-level state machine.

`allowed(state)` returns exactly the ids from which `parse` can
continue; `parse` itself advances only through `allowed`, so soundness
and completeness hold by construction. When the instruction matches a
known task template the reply section is pinned to that task's reply
kinds, in order; otherwise any caption/audio/motion reply parts are
accepted.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .vocabulary import Vocabulary, MAX_AGENTS
from .messages import (
    MotionMessage, CaptionPart, AudioPart, MotionPart, PastMotionPart,
    FutureMotionPart, DurationPart, HeadcountPart, GenrePart,
    PART_DELIMS, TEXT_LIKE, MOTION_LIKE, REPLY_KINDS, TASKS,
    task_for_instruction,
)


class GrammarError(ValueError):
    """Token sequence violates the message grammar."""


@dataclass(frozen=True)
class AllowedSet:
    ranges: tuple = ()           # half-open (lo, hi) id ranges
    ids: frozenset = frozenset()

    def __contains__(self, tid: int) -> bool:
        return any(lo <= tid < hi for lo, hi in self.ranges) or tid in self.ids

    def __bool__(self) -> bool:
        return bool(self.ranges) or bool(self.ids)

    def mask(self, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=bool)
        for lo, hi in self.ranges:
            out[lo:hi] = True
        for tid in self.ids:
            out[tid] = True
        return out

    def count(self) -> int:
        return sum(hi - lo for lo, hi in self.ranges) + len(self.ids)


@dataclass(frozen=True)
class ParserState:
    phase: str = "instr_bos"
    task: Optional[str] = None
    instr_ids: tuple = ()
    part_kind: Optional[str] = None
    in_reply: bool = False
    agents_done: int = 0         # completed [AGENT_SEP]s in the open span
    reply_index: int = 0

    @property
    def done(self) -> bool:
        return self.phase == "done"


_PART_BY_BOS = None


class MessageGrammar:
    def __init__(self, vocab: Vocabulary, max_agents: int = MAX_AGENTS):
        self.vocab = vocab
        self.max_agents = max_agents
        sp = vocab.special
        self._bos_to_kind = {sp[bos]: kind for kind, (bos, _) in PART_DELIMS.items()}
        self._kind_to_bos = {kind: sp[bos] for kind, (bos, _) in PART_DELIMS.items()}
        self._kind_to_eos = {kind: sp[eos] for kind, (_, eos) in PART_DELIMS.items()}
        self._text_range = (0, vocab.text_size)
        self._motion_range = (vocab.motion_base, vocab.audio_base)
        self._audio_range = (vocab.audio_base, vocab.special_base)

    def initial_state(self) -> ParserState:
        return ParserState()

    # ------------------------------------------------------------ allowed

    def allowed(self, state: ParserState) -> AllowedSet:
        sp = self.vocab.special
        ph = state.phase
        if ph == "instr_bos":
            return AllowedSet(ids=frozenset({sp["[INSTR_BOS]"]}))
        if ph == "instr":
            return AllowedSet(ranges=(self._text_range,),
                              ids=frozenset({sp["[INSTR_EOS]"]}))
        if ph == "cond_bos":
            return AllowedSet(ids=frozenset({sp["[COND_BOS]"]}))
        if ph == "cond_list":
            ids = {self._kind_to_bos[k] for k in PART_DELIMS}
            ids.add(sp["[COND_EOS]"])
            return AllowedSet(ids=frozenset(ids))
        if ph == "reply_bos":
            return AllowedSet(ids=frozenset({sp["[REPLY_BOS]"]}))
        if ph == "reply_list":
            spec = TASKS.get(state.task) if state.task else None
            if spec is not None:
                if state.reply_index < len(spec.reply):
                    want = spec.reply[state.reply_index]
                    return AllowedSet(ids=frozenset({self._kind_to_bos[want]}))
                return AllowedSet(ids=frozenset({sp["[REPLY_EOS]"]}))
            ids = {self._kind_to_bos[k] for k in REPLY_KINDS}
            ids.add(sp["[REPLY_EOS]"])
            return AllowedSet(ids=frozenset(ids))
        if ph == "part":
            kind = state.part_kind
            closers = {self._kind_to_eos[kind]}
            if kind in MOTION_LIKE:
                if state.agents_done < self.max_agents - 1:
                    closers.add(sp["[AGENT_SEP]"])
                return AllowedSet(ranges=(self._motion_range,), ids=frozenset(closers))
            if kind == "audio":
                return AllowedSet(ranges=(self._audio_range,), ids=frozenset(closers))
            return AllowedSet(ranges=(self._text_range,), ids=frozenset(closers))
        if ph == "done":
            return AllowedSet()
        raise AssertionError(f"unreachable phase {ph!r}")

    # --------------------------------------------------------------- step

    def step(self, state: ParserState, tid: int) -> ParserState:
        tid = int(tid)
        if tid not in self.allowed(state):
            raise GrammarError(
                f"token {self.vocab.render_token(tid)!r} not allowed in phase "
                f"{state.phase!r}" + (f" (inside {state.part_kind})" if state.part_kind else ""))
        sp = self.vocab.special
        ph = state.phase
        if ph == "instr_bos":
            return replace(state, phase="instr")
        if ph == "instr":
            if tid == sp["[INSTR_EOS]"]:
                instruction = self.vocab.text.detokenize(state.instr_ids)
                return replace(state, phase="cond_bos",
                               task=task_for_instruction(instruction))
            return replace(state, instr_ids=state.instr_ids + (tid,))
        if ph == "cond_bos":
            return replace(state, phase="cond_list")
        if ph == "cond_list":
            if tid == sp["[COND_EOS]"]:
                return replace(state, phase="reply_bos")
            return replace(state, phase="part", part_kind=self._bos_to_kind[tid],
                           agents_done=0)
        if ph == "reply_bos":
            return replace(state, phase="reply_list", in_reply=True, reply_index=0)
        if ph == "reply_list":
            if tid == sp["[REPLY_EOS]"]:
                return replace(state, phase="done")
            return replace(state, phase="part", part_kind=self._bos_to_kind[tid],
                           agents_done=0)
        if ph == "part":
            if tid == sp["[AGENT_SEP]"]:
                return replace(state, agents_done=state.agents_done + 1)
            if tid == self._kind_to_eos[state.part_kind]:
                if state.in_reply:
                    return replace(state, phase="reply_list", part_kind=None,
                                   reply_index=state.reply_index + 1)
                return replace(state, phase="cond_list", part_kind=None)
            return state  # span content
        raise GrammarError("sequence already complete")

    # ------------------------------------------------------------- closing

    def min_tokens_to_close(self, state: ParserState) -> int:
        """Fewest further tokens that reach the done state."""
        spec = TASKS.get(state.task) if state.task else None
        ph = state.phase

        def reply_cost(index: int) -> int:
            remaining = len(spec.reply) - index if spec else 0
            return 2 * max(remaining, 0) + 1       # part BOS/EOS pairs + [REPLY_EOS]

        if ph == "done":
            return 0
        if ph == "part":
            if state.in_reply:
                return 1 + reply_cost(state.reply_index + 1)
            return 1 + 1 + 1 + reply_cost(0)       # span EOS, [COND_EOS], [REPLY_BOS]
        if ph == "reply_list":
            return reply_cost(state.reply_index)
        if ph == "cond_list":
            return 1 + 1 + reply_cost(0)
        if ph == "reply_bos":
            return 1 + reply_cost(0)
        if ph == "cond_bos":
            return 2 + reply_cost(0)
        if ph == "instr":
            return 1 + 2 + 1 + reply_cost(0)
        return 2 + 2 + 1 + reply_cost(0)           # instr pair, cond pair, reply

    # --------------------------------------------------------------- parse

    def parse(self, ids) -> MotionMessage:
        sp = self.vocab.special
        state = self.initial_state()
        conditions, reply = [], []
        payload, agents = [], []
        instruction = None

        def close_part(kind):
            if kind in TEXT_LIKE:
                text = self.vocab.text.detokenize(payload)
                part = {"caption": CaptionPart, "duration": DurationPart,
                        "headcount": HeadcountPart, "genre": GenrePart}[kind](text)
            elif kind == "audio":
                part = AudioPart([self.vocab.audio_code(t) for t in payload])
            else:
                runs = agents + [payload]
                codes = [[self.vocab.motion_code(t) for t in run] for run in runs]
                cls = {"motion": MotionPart, "past_motion": PastMotionPart,
                       "future_motion": FutureMotionPart}[kind]
                part = cls(codes)
            (reply if state.in_reply else conditions).append(part)

        for tid in ids:
            tid = int(tid)
            prev = state
            try:
                state = self.step(state, tid)
            except GrammarError as exc:
                raise GrammarError(f"at token {self.vocab.render_token(tid)!r}: {exc}") from exc
            if prev.phase == "instr" and state.phase == "cond_bos":
                instruction = self.vocab.text.detokenize(prev.instr_ids)
            if prev.phase in ("cond_list", "reply_list") and state.phase == "part":
                payload, agents = [], []
            elif prev.phase == "part":
                if state.phase != "part":
                    close_part(prev.part_kind)
                elif tid == sp["[AGENT_SEP]"]:
                    agents.append(payload)
                    payload = []
                else:
                    payload.append(tid)
        if not state.done:
            raise GrammarError(f"truncated sequence (stopped in phase {state.phase!r})")
        task = state.task or _infer_task(conditions, reply) or "unknown"
        return MotionMessage(task=task, instruction=instruction,
                             conditions=conditions, reply=reply)


def _infer_task(conditions, reply) -> Optional[str]:
    cond_kinds = [p.kind for p in conditions]
    reply_kinds = tuple(p.kind for p in reply)
    for spec in TASKS.values():
        if reply_kinds != spec.reply:
            continue
        if not all(k in cond_kinds for k in spec.required):
            continue
        if not all(k in set(spec.required) | set(spec.optional) for k in cond_kinds):
            continue
        return spec.name
    return None
