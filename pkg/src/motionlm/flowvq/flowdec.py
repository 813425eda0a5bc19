"""Flow-matching refinement decoder: a transformer over noisy motion.

Eight pre-norm blocks, each cross-attention -> self-attention -> FFN.
Cross-attention keys/values come from the condition stream: a timestep
token (sinusoidal features of the warped time through a 2-layer MLP)
concatenated with the projected quantizer outputs, which carry
frame-scale positions so the decoder can localize codes in time.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .config import FlowVqConfig
from .nets import ParamSet


def sinusoid_positions(positions, dim, base: float = 10000.0) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    half = dim // 2
    freqs = base ** (-np.arange(half) / max(half, 1))
    ang = positions[:, None] * freqs[None, :]
    out = np.zeros((len(positions), dim))
    out[:, 0::2] = np.sin(ang[:, :dim - half])
    out[:, 1::2] = np.cos(ang[:, :half])
    return out


def time_features(t, dim) -> np.ndarray:
    """Fourier features of warped times in [0, 1]: [B] -> [B, dim]."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(np.linspace(np.log(1.0), np.log(1000.0), half))
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def _as_node(x):
    return x if isinstance(x, ad.DiffArray) else ad.constant(x)


def split_heads(x, heads):
    b, t, w = x.shape
    return ad.transpose(ad.reshape(x, (b, t, heads, w // heads)), (0, 2, 1, 3))


def merge_heads(x):
    b, h, t, d = x.shape
    return ad.reshape(ad.transpose(x, (0, 2, 1, 3)), (b, t, h * d))


class FlowDecoderNet:
    def __init__(self, motion_dim: int, config: FlowVqConfig, rng):
        self.config = config
        self.motion_dim = motion_dim
        self.ps = ParamSet()
        w = config.flow_width
        # per-frame input: noisy motion with the frame's code values
        # alongside; z also feeds cross-attention as memory tokens
        self._lin("x_in", motion_dim + config.code_dim, w, rng)
        self._lin("z_in", config.code_dim, w, rng)
        self._lin("t_in", w, w, rng)
        self._lin("t_mid", w, w, rng)
        for i in range(config.flow_blocks):
            for attn in ("ca", "sa"):
                for mat in ("q", "k", "v", "o"):
                    self._lin(f"b{i}.{attn}.{mat}", w, w, rng)
                self._ln(f"b{i}.{attn}.ln", w)
            self._ln(f"b{i}.ca.lnkv", w)
            self._lin(f"b{i}.ffn.w1", w, config.flow_ffn_dim, rng)
            self._lin(f"b{i}.ffn.w2", config.flow_ffn_dim, w, rng)
            self._ln(f"b{i}.ffn.ln", w)
        self._ln("out.ln", w)
        self._lin("out.proj", w, motion_dim, rng, scale=1e-2)

    def _lin(self, name, cin, cout, rng, scale=None):
        std = scale if scale is not None else np.sqrt(2.0 / cin)
        self.ps.add(f"{name}.w", rng.normal(0.0, std, size=(cin, cout)))
        self.ps.add(f"{name}.b", np.zeros(cout))

    def _ln(self, name, dim):
        self.ps.add(f"{name}.g", np.ones(dim))
        self.ps.add(f"{name}.b", np.zeros(dim))

    def params(self):
        return self.ps.named()

    def _apply_lin(self, x, name):
        return ad.add(ad.matmul(x, self.ps.params[f"{name}.w"]),
                      self.ps.params[f"{name}.b"])

    def _apply_ln(self, x, name):
        return ad.layernorm(x, self.ps.params[f"{name}.g"], self.ps.params[f"{name}.b"])

    def _attend(self, q_src, kv_src, name):
        heads = self.config.flow_heads
        q = split_heads(self._apply_lin(q_src, f"{name}.q"), heads)
        k = split_heads(self._apply_lin(kv_src, f"{name}.k"), heads)
        v = split_heads(self._apply_lin(kv_src, f"{name}.v"), heads)
        out = merge_heads(ad.attention(q, k, v))
        return self._apply_lin(out, f"{name}.o")

    def forward(self, x_t, z_values, t_warped):
        """x_t [B, T, C], z_values [B, T', code_dim], t_warped [B] -> v [B, T, C]."""
        cfg = self.config
        b, t, _ = x_t.shape
        tz = z_values.shape[1]
        down = cfg.downsample_total
        # nearest-code channel concat so every frame sees its own codes
        reps = [min(tz - 1, i // down) for i in range(t)]
        z_frames = (z_values.data if isinstance(z_values, ad.DiffArray)
                    else np.asarray(z_values))[:, reps, :]
        x = self._apply_lin(ad.concat([_as_node(x_t), ad.constant(z_frames)], axis=2),
                            "x_in")
        x = ad.add(x, ad.constant(sinusoid_positions(np.arange(t), cfg.flow_width)[None]))
        tok = ad.constant(time_features(t_warped, cfg.flow_width)[:, None, :])
        tok = self._apply_lin(ad.silu(self._apply_lin(tok, "t_in")), "t_mid")
        x = ad.add(x, tok)
        z = self._apply_lin(_as_node(z_values), "z_in")
        centers = np.arange(tz) * down + (down - 1) / 2.0
        z = ad.add(z, ad.constant(sinusoid_positions(centers, cfg.flow_width)[None]))
        cond = ad.concat([tok, z], axis=1)
        for i in range(cfg.flow_blocks):
            kv = self._apply_ln(cond, f"b{i}.ca.lnkv")
            x = ad.add(x, self._attend(self._apply_ln(x, f"b{i}.ca.ln"), kv, f"b{i}.ca"))
            h = self._apply_ln(x, f"b{i}.sa.ln")
            x = ad.add(x, self._attend(h, h, f"b{i}.sa"))
            h = self._apply_ln(x, f"b{i}.ffn.ln")
            h = self._apply_lin(ad.silu(self._apply_lin(h, f"b{i}.ffn.w1")), f"b{i}.ffn.w2")
            x = ad.add(x, h)
        return self._apply_lin(self._apply_ln(x, "out.ln"), "out.proj")

    def manifest(self):
        block = [("cross_attention", {"heads": self.config.flow_heads}),
                 ("self_attention", {"heads": self.config.flow_heads}),
                 ("ffn", {"hidden": self.config.flow_ffn_dim})]
        return {"flow_decoder": block * self.config.flow_blocks}
