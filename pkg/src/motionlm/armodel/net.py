"""Decoder-only transformer over the unified vocabulary.

Pre-norm blocks with causal attention, rotary position twists on q/k,
SiLU FFN, and the output projection tied to the token embedding.
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..autodiff import save_params, load_params, params_digest
from ..vocab import Vocabulary
from .config import ArConfig


@contextmanager
def no_grad(params):
    """Temporarily treat parameters as constants (inference mode)."""
    flags = [(p, p.requires_grad) for p in params.values()]
    for p, _ in flags:
        p.requires_grad = False
    try:
        yield
    finally:
        for p, f in flags:
            p.requires_grad = f


def _rope_tables(length: int, dim: int, base: float = 10000.0):
    half = dim // 2
    inv = base ** (-np.arange(half) / half)
    ang = np.arange(length)[:, None] * inv[None, :]
    return np.cos(ang), np.sin(ang)


class ArModel:
    def __init__(self, vocab_size: int, config: ArConfig, seed: int = 0):
        self.vocab_size = vocab_size
        self.config = config
        rng = np.random.default_rng([seed, 606])
        self.ps = {}
        w = config.width
        self._add("embed", rng.normal(0.0, 0.02, size=(vocab_size, w)))
        for i in range(config.layers):
            for mat in ("q", "k", "v", "o"):
                self._add(f"l{i}.attn.{mat}.w", rng.normal(0, np.sqrt(1.0 / w), size=(w, w)))
            self._add(f"l{i}.attn.ln.g", np.ones(w))
            self._add(f"l{i}.attn.ln.b", np.zeros(w))
            self._add(f"l{i}.ffn.w1", rng.normal(0, np.sqrt(2.0 / w), size=(w, config.ffn_width)))
            self._add(f"l{i}.ffn.w2", rng.normal(0, np.sqrt(2.0 / config.ffn_width),
                                                 size=(config.ffn_width, w)))
            self._add(f"l{i}.ffn.ln.g", np.ones(w))
            self._add(f"l{i}.ffn.ln.b", np.zeros(w))
        self._add("out.ln.g", np.ones(w))
        self._add("out.ln.b", np.zeros(w))

    def _add(self, name, array):
        self.ps[name] = ad.leaf(np.asarray(array, dtype=np.float64))

    def params(self):
        return self.ps

    def digest(self) -> str:
        return params_digest({k: p.data for k, p in self.ps.items()})

    # ----------------------------------------------------------- forward

    def hidden(self, ids: np.ndarray):
        """[B, T] int ids -> final hidden states [B, T, W] (pre-logits)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2:
            raise ValueError(f"ids must be [B, T], got {ids.shape}")
        b, t = ids.shape
        if t > self.config.context:
            raise ValueError(f"sequence length {t} exceeds context {self.config.context}")
        cfg = self.config
        heads, w = cfg.heads, cfg.width
        hd = w // heads
        cos, sin = _rope_tables(t, hd)
        x = ad.embedding(self.ps["embed"], ids)
        for i in range(cfg.layers):
            h = ad.layernorm(x, self.ps[f"l{i}.attn.ln.g"], self.ps[f"l{i}.attn.ln.b"])
            q = self._heads(ad.matmul(h, self.ps[f"l{i}.attn.q.w"]), heads)
            k = self._heads(ad.matmul(h, self.ps[f"l{i}.attn.k.w"]), heads)
            v = self._heads(ad.matmul(h, self.ps[f"l{i}.attn.v.w"]), heads)
            if cfg.rope:
                q = ad.rope(q, cos, sin)
                k = ad.rope(k, cos, sin)
            att = ad.attention(q, k, v, causal=True)
            att = ad.reshape(ad.transpose(att, (0, 2, 1, 3)), (b, t, w))
            x = ad.add(x, ad.matmul(att, self.ps[f"l{i}.attn.o.w"]))
            h = ad.layernorm(x, self.ps[f"l{i}.ffn.ln.g"], self.ps[f"l{i}.ffn.ln.b"])
            h = ad.matmul(ad.silu(ad.matmul(h, self.ps[f"l{i}.ffn.w1"])),
                          self.ps[f"l{i}.ffn.w2"])
            x = ad.add(x, h)
        return ad.layernorm(x, self.ps["out.ln.g"], self.ps["out.ln.b"])

    @staticmethod
    def _heads(x, heads):
        b, t, w = x.shape
        return ad.transpose(ad.reshape(x, (b, t, heads, w // heads)), (0, 2, 1, 3))

    def forward(self, ids: np.ndarray):
        """Logits [B, T, V] with the embedding tied as output projection."""
        h = self.hidden(ids)
        return ad.matmul(h, ad.transpose(self.ps["embed"], (1, 0)))

    def last_logits(self, ids: np.ndarray) -> np.ndarray:
        """Inference helper: numpy logits [B, V] for the final position."""
        with no_grad(self.ps):
            h = self.hidden(ids).data[:, -1]
        return h @ self.ps["embed"].data.T

    # -------------------------------------------------------- persistence

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "armodel.json").write_text(
            json.dumps({"vocab_size": self.vocab_size,
                        "config": self.config.to_dict()}, indent=1, sort_keys=True),
            encoding="utf-8")
        save_params({k: p.data for k, p in self.ps.items()}, out / "armodel.mprm")

    @classmethod
    def load(cls, out_dir) -> "ArModel":
        out = Path(out_dir)
        meta = json.loads((out / "armodel.json").read_text(encoding="utf-8"))
        model = cls(meta["vocab_size"], ArConfig.from_dict(meta["config"]))
        loaded = load_params(out / "armodel.mprm")
        for k, p in model.ps.items():
            p.data[...] = loaded[k]
        return model

    def clone(self) -> "ArModel":
        twin = ArModel(self.vocab_size, self.config)
        for k, p in self.ps.items():
            twin.ps[k].data[...] = p.data
        return twin
