"""Stage-1 convolutional encoder/decoder stacks.

Mirrored hierarchies: the encoder runs `blocks_per_layer` residual
blocks per layer with stride-2 downsampling convs (kernel 4) in the
deepest layers, two extra residual blocks next to the quantizer, and
3x3 convs at the input/head. The decoder mirrors with nearest-neighbor
upsampling + 3x3 conv per layer and a conv-relu-conv output head.
Residual block convs are 3x3 with the configured dilation/norm/act.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .config import FlowVqConfig


def he_conv(rng, cout, cin, k):
    return rng.normal(0.0, np.sqrt(2.0 / (cin * k)), size=(cout, cin, k))


class ParamSet:
    def __init__(self):
        self.params = {}

    def add(self, name, array):
        p = ad.leaf(np.asarray(array, dtype=np.float64))
        self.params[name] = p
        return p

    def named(self):
        return self.params


def patchify(x, mode: str, size: int):
    """[B, C, T] -> [B, C*size, T/size]; haar applies the orthonormal
    pair transform once per halving."""
    if size == 1:
        return x
    b, c, t = x.shape
    if t % 2:
        raise ValueError(f"length {t} not divisible for patchify")
    lo = ad.narrow(ad.reshape(x, (b, c, t // 2, 2)), 3, 0, 1)
    hi = ad.narrow(ad.reshape(x, (b, c, t // 2, 2)), 3, 1, 1)
    lo = ad.reshape(lo, (b, c, t // 2))
    hi = ad.reshape(hi, (b, c, t // 2))
    if mode == "haar":
        s = 1.0 / np.sqrt(2.0)
        a = ad.scale(ad.add(lo, hi), s)
        d = ad.scale(ad.sub(lo, hi), s)
        stacked = ad.concat([a, d], axis=1)
    else:
        stacked = ad.concat([lo, hi], axis=1)
    return patchify(stacked, mode, size // 2)


def unpatchify(x, mode: str, size: int, orig_channels: int):
    if size == 1:
        return x
    x = unpatchify(x, mode, size // 2, orig_channels * 2)
    b, c2, t = x.shape
    c = c2 // 2
    first = ad.narrow(x, 1, 0, c)
    second = ad.narrow(x, 1, c, c)
    if mode == "haar":
        s = 1.0 / np.sqrt(2.0)
        lo = ad.scale(ad.add(first, second), s)
        hi = ad.scale(ad.sub(first, second), s)
    else:
        lo, hi = first, second
    pair = ad.concat([ad.reshape(lo, (b, c, t, 1)), ad.reshape(hi, (b, c, t, 1))], axis=3)
    return ad.reshape(pair, (b, c, 2 * t))


def upsample2(x):
    """Nearest-neighbor x2 along time: [B, C, T] -> [B, C, 2T]."""
    b, c, t = x.shape
    col = ad.reshape(x, (b, c, t, 1))
    return ad.reshape(ad.concat([col, col], axis=3), (b, c, 2 * t))


class Stage1Net:
    def __init__(self, motion_dim: int, config: FlowVqConfig, rng):
        self.config = config
        self.motion_dim = motion_dim
        self.in_channels = motion_dim * config.patchify_size
        self.ps = ParamSet()
        self._build(rng)

    # -- construction -------------------------------------------------

    def _norm_params(self, name, channels):
        if self.config.norm_act == "relu_nonorm":
            return None
        g = self.ps.add(f"{name}.g", np.ones(channels))
        b = self.ps.add(f"{name}.b", np.zeros(channels))
        return (g, b)

    def _conv(self, name, cout, cin, k, rng):
        w = self.ps.add(f"{name}.w", he_conv(rng, cout, cin, k))
        b = self.ps.add(f"{name}.b", np.zeros(cout))
        return (w, b)

    def _block_dilation(self, block_index: int) -> int:
        if self.config.dilation == "none":
            return 1
        if self.config.dilation == "constant":
            return 3
        return 3 ** block_index

    def _build(self, rng):
        cfg = self.config
        w = cfg.channels
        self._enc = {"in": self._conv("enc.in", w, self.in_channels, 3, rng)}
        self._blocks_meta = []
        for layer in range(cfg.layers):
            for blk in range(cfg.blocks_per_layer):
                self._make_block(f"enc.l{layer}.b{blk}", w, blk, rng)
            if self._enc_has_down(layer):
                self._enc[f"down{layer}"] = self._conv(f"enc.down{layer}", w, w, 4, rng)
        for blk in range(2):
            self._make_block(f"enc.mid{blk}", w, blk, rng)
        self._enc["head"] = self._conv("enc.head", cfg.code_dim, w, 3, rng)

        self._dec = {"in": self._conv("dec.in", w, cfg.code_dim, 3, rng)}
        for blk in range(2):
            self._make_block(f"dec.mid{blk}", w, blk, rng)
        for layer in range(cfg.layers):
            if self._dec_has_up(layer):
                self._dec[f"up{layer}"] = self._conv(f"dec.up{layer}", w, w, 3, rng)
            for blk in range(cfg.blocks_per_layer):
                self._make_block(f"dec.l{layer}.b{blk}", w, blk, rng)
        self._dec["out0"] = self._conv("dec.out0", w, w, 3, rng)
        self._dec["out1"] = self._conv("dec.out1", self.in_channels, w, 3, rng)

    def _make_block(self, name, width, blk_index, rng):
        self._conv(f"{name}.c0", width, width, 3, rng)
        self._conv(f"{name}.c1", width, width, 3, rng)
        self._norm_params(f"{name}.n0", width)
        self._norm_params(f"{name}.n1", width)

    def _enc_has_down(self, layer: int) -> bool:
        return layer >= self.config.layers - self.config.conv_downsample_stages

    def _dec_has_up(self, layer: int) -> bool:
        # decoder mirrors the encoder's deepest layers first
        return layer < self.config.conv_downsample_stages

    # -- forward helpers ----------------------------------------------

    def params(self):
        return self.ps.named()

    def _act(self, x):
        return ad.silu(x) if self.config.norm_act.startswith("silu") else ad.relu(x)

    def _norm(self, x, name):
        if self.config.norm_act == "relu_nonorm":
            return x
        g = self.ps.params[f"{name}.g"]
        b = self.ps.params[f"{name}.b"]
        if self.config.norm_act == "silu_layernorm":
            y = ad.transpose(x, (0, 2, 1))
            y = ad.layernorm(y, g, b)
            return ad.transpose(y, (0, 2, 1))
        groups = max(1, min(8, x.shape[1]))
        while x.shape[1] % groups:
            groups -= 1
        return ad.groupnorm(x, g, b, groups=groups)

    def _apply_conv(self, x, name, stride=1, dilation=1, k=None):
        w = self.ps.params[f"{name}.w"]
        b = self.ps.params[f"{name}.b"]
        k = k or w.shape[2]
        if self.config.causal:
            span = dilation * (k - 1) + 1
            left = span - stride if stride > 1 else span - 1
            zeros = ad.constant(np.zeros((x.shape[0], x.shape[1], left)))
            x = ad.concat([zeros, x], axis=2)
            return ad.conv1d(x, w, b, stride=stride, padding=0, dilation=dilation)
        pad = dilation if k == 3 else 1
        return ad.conv1d(x, w, b, stride=stride, padding=pad, dilation=dilation)

    def _block(self, x, name, blk_index):
        d = self._block_dilation(blk_index)
        h = self._apply_conv(self._act(self._norm(x, f"{name}.n0")), f"{name}.c0", dilation=d)
        h = self._apply_conv(self._act(self._norm(h, f"{name}.n1")), f"{name}.c1")
        return ad.add(x, h)

    # -- public passes ------------------------------------------------

    def encode(self, x):
        """[B, motion_dim, T] -> latents [B, code_dim, T']."""
        cfg = self.config
        x = patchify(x, cfg.patchify_mode, cfg.patchify_size)
        h = self._act(self._apply_conv(x, "enc.in"))
        for layer in range(cfg.layers):
            if not cfg.downsample_after_blocks and self._enc_has_down(layer):
                h = self._apply_conv(h, f"enc.down{layer}", stride=2)
            for blk in range(cfg.blocks_per_layer):
                h = self._block(h, f"enc.l{layer}.b{blk}", blk)
            if cfg.downsample_after_blocks and self._enc_has_down(layer):
                h = self._apply_conv(h, f"enc.down{layer}", stride=2)
        for blk in range(2):
            h = self._block(h, f"enc.mid{blk}", blk)
        return self._apply_conv(h, "enc.head")

    def decode(self, z):
        """[B, code_dim, T'] -> [B, motion_dim, T]."""
        cfg = self.config
        h = self._act(self._apply_conv(z, "dec.in"))
        for blk in range(2):
            h = self._block(h, f"dec.mid{blk}", blk)
        for layer in range(cfg.layers):
            if self._dec_has_up(layer):
                h = self._apply_conv(upsample2(h), f"dec.up{layer}")
            for blk in range(cfg.blocks_per_layer):
                h = self._block(h, f"dec.l{layer}.b{blk}", blk)
        h = self._apply_conv(h, "dec.out0")
        h = self._apply_conv(ad.relu(h), "dec.out1")
        return unpatchify(h, cfg.patchify_mode, cfg.patchify_size, self.motion_dim)

    # -- structure ----------------------------------------------------

    def manifest(self):
        """Ordered (kind, detail) records of both stacks, for structural
        inspection."""
        cfg = self.config
        enc = [("conv", {"k": 3})]
        for layer in range(cfg.layers):
            stage = [("resblock", {"convs": (3, 3)})] * cfg.blocks_per_layer
            down = [("downsample_conv", {"k": 4, "stride": 2})] if self._enc_has_down(layer) else []
            enc += down + stage if not cfg.downsample_after_blocks else stage + down
        enc += [("resblock", {"convs": (3, 3)})] * 2
        enc += [("conv", {"k": 3})]
        dec = [("conv", {"k": 3})]
        dec += [("resblock", {"convs": (3, 3)})] * 2
        for layer in range(cfg.layers):
            if self._dec_has_up(layer):
                dec += [("upsample_nearest", {"factor": 2}), ("conv", {"k": 3})]
            dec += [("resblock", {"convs": (3, 3)})] * cfg.blocks_per_layer
        dec += [("conv", {"k": 3}), ("relu", {}), ("conv", {"k": 3})]
        return {"encoder": enc, "decoder": dec}
