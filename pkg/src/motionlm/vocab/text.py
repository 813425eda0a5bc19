"""Trainable subword text tokenizer.

The table always contains all 256 single bytes (totality via byte
fallback) plus subwords merged by pair frequency over a training
corpus. Encoding is greedy longest-match against the table, which makes
detokenize(tokenize(s)) exact for every UTF-8 string.
"""
from __future__ import annotations

from collections import Counter
from typing import Dict, List


class TextTokenizer:
    def __init__(self, pieces: List[bytes]):
        singles = [bytes([b]) for b in range(256)]
        seen = set(singles)
        ordered = list(singles)
        for p in pieces:
            if p not in seen:
                seen.add(p)
                ordered.append(p)
        self.pieces = ordered
        self.piece_to_id: Dict[bytes, int] = {p: i for i, p in enumerate(ordered)}
        self.max_len = max(len(p) for p in ordered)

    @property
    def size(self) -> int:
        return len(self.pieces)

    @classmethod
    def train(cls, corpus, vocab_size: int = 512, min_count: int = 2) -> "TextTokenizer":
        """Grow subwords by iterative most-frequent-pair merging."""
        if vocab_size < 256:
            raise ValueError(f"vocab_size must be >= 256, got {vocab_size}")
        words = [list(s.encode("utf-8")) for s in corpus]
        words = [[bytes([b]) for b in w] for w in words if w]
        merges = []
        while len(merges) < vocab_size - 256:
            pairs = Counter()
            for w in words:
                for a, b in zip(w, w[1:]):
                    pairs[(a, b)] += 1
            if not pairs:
                break
            (a, b), count = max(pairs.items(), key=lambda kv: (kv[1], kv[0]))
            if count < min_count:
                break
            merged = a + b
            merges.append(merged)
            for w in words:
                i = 0
                while i < len(w) - 1:
                    if w[i] == a and w[i + 1] == b:
                        w[i:i + 2] = [merged]
                    else:
                        i += 1
        return cls(merges)

    def tokenize(self, text: str) -> List[int]:
        raw = text.encode("utf-8")
        out = []
        i = 0
        while i < len(raw):
            for ln in range(min(self.max_len, len(raw) - i), 0, -1):
                piece = raw[i:i + ln]
                tid = self.piece_to_id.get(piece)
                if tid is not None:
                    out.append(tid)
                    i += ln
                    break
        return out

    def detokenize(self, ids) -> str:
        chunks = []
        for tid in ids:
            tid = int(tid)
            if not 0 <= tid < len(self.pieces):
                raise ValueError(f"text id {tid} out of range")
            chunks.append(self.pieces[tid])
        return b"".join(chunks).decode("utf-8", errors="replace")

    def dump(self) -> List[str]:
        return [p.hex() for p in self.pieces]

    @classmethod
    def from_dump(cls, hex_pieces) -> "TextTokenizer":
        return cls([bytes.fromhex(h) for h in hex_pieces])
