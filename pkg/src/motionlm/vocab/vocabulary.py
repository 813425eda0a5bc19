"""Unified token space: text, motion, audio, and special regions.

Regions are contiguous and disjoint: text ids first, then 4375 motion
ids rendered <|MOT_k|> (1-based k), 4096 audio ids rendered <|AUD_k|>,
and exactly 29 special tokens. Rendered names round-trip through
parse_token for every id.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import List, Optional

from .text import TextTokenizer

MOTION_REGION_SIZE = 4375
AUDIO_REGION_SIZE = 4096
MAX_AGENTS = 8

SPECIAL_TOKENS = (
    "[PAD]",
    "[INSTR_BOS]", "[INSTR_EOS]",
    "[COND_BOS]", "[COND_EOS]",
    "[REPLY_BOS]", "[REPLY_EOS]",
    "[TEXT_BOS]", "[TEXT_EOS]",
    "[AUDIO_BOS]", "[AUDIO_EOS]",
    "[MOT_BOS]", "[MOT_EOS]",
    "[AGENT_SEP]",
    "[DUR_BOS]", "[DUR_EOS]",
    "[COUNT_BOS]", "[COUNT_EOS]",
    "[GENRE_BOS]", "[GENRE_EOS]",
    "[PAST_BOS]", "[PAST_EOS]",
    "[FUT_BOS]", "[FUT_EOS]",
    "[RSV_0]", "[RSV_1]", "[RSV_2]", "[RSV_3]", "[RSV_4]",
)
assert len(SPECIAL_TOKENS) == 29

_MOT_RE = re.compile(r"^<\|MOT_(\d+)\|>$")
_AUD_RE = re.compile(r"^<\|AUD_(\d+)\|>$")


class Vocabulary:
    def __init__(self, text_tokenizer: TextTokenizer):
        self.text = text_tokenizer
        self.text_size = text_tokenizer.size
        self.motion_base = self.text_size
        self.audio_base = self.motion_base + MOTION_REGION_SIZE
        self.special_base = self.audio_base + AUDIO_REGION_SIZE
        self.size = self.special_base + len(SPECIAL_TOKENS)
        self.special = {name: self.special_base + i
                        for i, name in enumerate(SPECIAL_TOKENS)}

    # -- region classification ---------------------------------------

    def region(self, tid: int) -> str:
        if 0 <= tid < self.text_size:
            return "text"
        if self.motion_base <= tid < self.audio_base:
            return "motion"
        if self.audio_base <= tid < self.special_base:
            return "audio"
        if self.special_base <= tid < self.size:
            return "special"
        raise ValueError(f"token id {tid} out of range [0, {self.size})")

    def motion_id(self, code: int) -> int:
        if not 0 <= code < MOTION_REGION_SIZE:
            raise ValueError(f"motion code {code} out of range")
        return self.motion_base + code

    def audio_id(self, code: int) -> int:
        if not 0 <= code < AUDIO_REGION_SIZE:
            raise ValueError(f"audio code {code} out of range")
        return self.audio_base + code

    def motion_code(self, tid: int) -> int:
        if self.region(tid) != "motion":
            raise ValueError(f"id {tid} is not a motion token")
        return tid - self.motion_base

    def audio_code(self, tid: int) -> int:
        if self.region(tid) != "audio":
            raise ValueError(f"id {tid} is not an audio token")
        return tid - self.audio_base

    # -- rendering ------------------------------------------------------

    def render_token(self, tid: int) -> str:
        reg = self.region(tid)
        if reg == "text":
            piece = self.text.pieces[tid]
            return piece.decode("utf-8", errors="backslashreplace")
        if reg == "motion":
            return f"<|MOT_{tid - self.motion_base + 1}|>"
        if reg == "audio":
            return f"<|AUD_{tid - self.audio_base + 1}|>"
        return SPECIAL_TOKENS[tid - self.special_base]

    def parse_token(self, name: str) -> Optional[int]:
        """Inverse of render_token for motion/audio/special names."""
        if name in self.special:
            return self.special[name]
        m = _MOT_RE.match(name)
        if m:
            k = int(m.group(1))
            if 1 <= k <= MOTION_REGION_SIZE:
                return self.motion_base + k - 1
            return None
        m = _AUD_RE.match(name)
        if m:
            k = int(m.group(1))
            if 1 <= k <= AUDIO_REGION_SIZE:
                return self.audio_base + k - 1
            return None
        return None

    def render(self, ids) -> str:
        """Readable one-line form of a token sequence: text pieces joined
        as-is (they carry their own spacing), other tokens space-separated."""
        out = []
        prev_text = False
        for t in ids:
            t = int(t)
            is_text = self.region(t) == "text"
            piece = self.render_token(t)
            if out and not (is_text and prev_text):
                out.append(" ")
            out.append(piece)
            prev_text = is_text
        return "".join(out)

    # -- persistence ---------------------------------------------------

    def save(self, path) -> None:
        lines = []
        for tid in range(self.size):
            reg = self.region(tid)
            if reg == "text":
                body = self.text.pieces[tid].hex()
            else:
                body = self.render_token(tid)
            lines.append(f"{body}\t{reg}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        pieces = [bytes.fromhex(body) for body, reg in
                  (ln.rsplit("\t", 1) for ln in lines) if reg == "text"]
        vocab = cls(TextTokenizer(pieces))
        if vocab.size != len(lines):
            raise ValueError(f"{path}: vocabulary length mismatch "
                             f"({len(lines)} lines vs {vocab.size} ids)")
        return vocab
