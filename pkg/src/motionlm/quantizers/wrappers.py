"""Uniform quantizer interface used by the tokenizer training loop.

All four quantizers expose quantize/dequantize over [T, d] latents plus an
optional training-time state update (a no-op for FSQ/LFQ). RVQ emits
`depth` codes per timestep; the others emit one.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fsq import FsqLevels, fsq_quantize, fsq_dequantize
from .vq import Codebook, vq_quantize, vq_ema_update
from .lfq import lfq_quantize, lfq_dequantize
from .rvq import RvqStack, rvq_quantize, rvq_dequantize, rvq_ema_update

CODEBOOK_MAGIC = b"MQCB"


class QuantizerBase:
    name = "base"
    codes_per_step = 1

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def codebook_size(self) -> int:
        raise NotImplementedError

    def quantize(self, latents):
        raise NotImplementedError

    def dequantize(self, codes):
        raise NotImplementedError

    def update(self, latents, codes, rng) -> None:
        """Training-time state update; default no-op."""

    def state_entries(self):
        """Learned codebooks to persist, empty for structural quantizers."""
        return []

    def load_entries(self, entries) -> None:
        if entries:
            raise ValueError(f"{self.name} quantizer carries no codebook state")


class FsqQuantizer(QuantizerBase):
    name = "fsq"

    def __init__(self, levels=None):
        self.levels = levels if isinstance(levels, FsqLevels) else FsqLevels(
            tuple(levels) if levels is not None else FsqLevels().levels)

    @property
    def dim(self):
        return self.levels.dim

    @property
    def codebook_size(self):
        return self.levels.codebook_size

    def quantize(self, latents):
        return fsq_quantize(latents, self.levels)

    def dequantize(self, codes):
        return fsq_dequantize(codes, self.levels)


class VqQuantizer(QuantizerBase):
    name = "vq"

    def __init__(self, codebook: Codebook, decay: float = 0.99, reseed_after: int = 10):
        self.codebook = codebook
        self.decay = decay
        self.reseed_after = reseed_after

    @property
    def dim(self):
        return self.codebook.dim

    @property
    def codebook_size(self):
        return self.codebook.size

    def quantize(self, latents):
        return vq_quantize(latents, self.codebook)

    def dequantize(self, codes):
        codes = np.asarray(codes, dtype=np.int64)
        if codes.min(initial=0) < 0 or codes.max(initial=0) >= self.codebook.size:
            raise ValueError(f"codes out of range [0, {self.codebook.size})")
        return self.codebook.entries[codes]

    def update(self, latents, codes, rng):
        self.codebook = vq_ema_update(self.codebook, latents, codes, self.decay,
                                      self.reseed_after, rng)

    def state_entries(self):
        return [self.codebook.entries]

    def load_entries(self, entries):
        (ent,) = entries
        self.codebook = Codebook(entries=ent)


class LfqQuantizer(QuantizerBase):
    name = "lfq"

    def __init__(self, dim: int):
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    @property
    def codebook_size(self):
        return 1 << self._dim

    def quantize(self, latents):
        return lfq_quantize(latents)

    def dequantize(self, codes):
        return lfq_dequantize(codes, self._dim)


class RvqQuantizer(QuantizerBase):
    name = "rvq"

    def __init__(self, stack: RvqStack, decay: float = 0.99, reseed_after: int = 10):
        self.stack = stack
        self.decay = decay
        self.reseed_after = reseed_after

    @property
    def codes_per_step(self):
        return self.stack.depth

    @property
    def dim(self):
        return self.stack.dim

    @property
    def codebook_size(self):
        return self.stack.stages[0].size

    def quantize(self, latents):
        return rvq_quantize(latents, self.stack)

    def dequantize(self, codes):
        return rvq_dequantize(codes, self.stack)

    def update(self, latents, codes, rng):
        self.stack = rvq_ema_update(self.stack, latents, self.decay,
                                    self.reseed_after, rng)

    def state_entries(self):
        return [cb.entries for cb in self.stack.stages]

    def load_entries(self, entries):
        if len(entries) != self.stack.depth:
            raise ValueError(f"expected {self.stack.depth} codebooks, got {len(entries)}")
        self.stack = RvqStack(stages=[Codebook(entries=e) for e in entries])


def make_quantizer(kind: str, dim: int = None, levels=None, size: int = 512,
                   depth: int = 3, seed: int = 0, decay: float = 0.99,
                   reseed_after: int = 10) -> QuantizerBase:
    """Build a quantizer from config-style arguments."""
    rng = np.random.default_rng([seed, 9151])
    if kind == "fsq":
        return FsqQuantizer(levels)
    if kind == "vq":
        if dim is None:
            raise ValueError("vq needs dim")
        return VqQuantizer(Codebook.random_init(size, dim, rng), decay, reseed_after)
    if kind == "lfq":
        if dim is None:
            raise ValueError("lfq needs dim")
        return LfqQuantizer(dim)
    if kind == "rvq":
        if dim is None:
            raise ValueError("rvq needs dim")
        return RvqQuantizer(RvqStack.create(depth, size, dim, rng), decay, reseed_after)
    raise ValueError(f"unknown quantizer kind {kind!r}")


def save_codebooks(entries_list, path) -> None:
    """MQCB file: per codebook u32 K, u32 d, K*d little-endian f32 entries."""
    blob = bytearray(CODEBOOK_MAGIC)
    for entries in entries_list:
        entries = np.asarray(entries, dtype=np.float64)
        k, d = entries.shape
        blob += struct.pack("<II", k, d)
        blob += entries.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_codebooks(path):
    raw = Path(path).read_bytes()
    if raw[:4] != CODEBOOK_MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    off, out = 4, []
    while off < len(raw):
        k, d = struct.unpack_from("<II", raw, off)
        off += 8
        n = k * d * 4
        if off + n > len(raw):
            raise ValueError(f"{path}: truncated codebook payload")
        ent = np.frombuffer(raw[off:off + n], dtype="<f4").astype(np.float64)
        out.append(ent.reshape(k, d))
        off += n
    return out
