"""Trained tokenizer bundle: encode / decode / flow-refined decode.

Each agent's trajectory is tokenized independently with the shared
model. Frames are right-padded with zeros (in standardized space) to a
multiple of the temporal factor; the pad length is reported so decoded
clips can be trimmed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .. import autodiff as ad
from ..autodiff import constant, save_params, load_params, params_digest
from ..data import MotionClip, StandardizationStats, standardize, destandardize
from ..quantizers import make_quantizer
from ..quantizers.wrappers import save_codebooks, load_codebooks
from .config import FlowVqConfig
from .flowdec import FlowDecoderNet
from .nets import Stage1Net
from .schedule import NoiseSchedule


@dataclass
class EncodeResult:
    codes: np.ndarray          # [agents, T'] or [agents, T', depth] for rvq
    pad_frames: int            # right padding added before encoding
    frames: int                # original frame count
    fps: float


class FlowVqModel:
    def __init__(self, config: FlowVqConfig, motion_dim: int,
                 stats: StandardizationStats, seed: int = 0):
        self.config = config
        self.motion_dim = motion_dim
        self.stats = stats
        rng = np.random.default_rng([seed, 101])
        self.net = Stage1Net(motion_dim, config, rng)
        self.quantizer = make_quantizer(
            config.quantizer, dim=config.code_dim, levels=config.fsq_levels,
            size=config.codebook_size, depth=config.rvq_depth, seed=seed,
            decay=config.ema_decay, reseed_after=config.reseed_after)
        self.flow: Optional[FlowDecoderNet] = None
        self.schedule = NoiseSchedule(config.train_timesteps,
                                      config.inference_steps, config.shift)

    def init_flow(self, seed: int = 0) -> FlowDecoderNet:
        rng = np.random.default_rng([seed, 202])
        self.flow = FlowDecoderNet(self.motion_dim, self.config, rng)
        return self.flow

    # ---------------------------------------------------------------- encode

    def _agent_channels(self, clip: MotionClip, agent: int) -> np.ndarray:
        """Standardized per-agent features, [C, T]."""
        return clip.positions[:, agent].reshape(clip.frames, -1).T

    def _pad_to_multiple(self, x: np.ndarray):
        down = self.config.downsample_total
        t = x.shape[-1]
        pad = (-t) % down
        if pad:
            x = np.concatenate([x, np.zeros(x.shape[:-1] + (pad,))], axis=-1)
        return x, pad

    def encode(self, clip: MotionClip, standardized: bool = False) -> EncodeResult:
        """Tokenize every agent independently -> EncodeResult."""
        if clip.joints * 3 != self.motion_dim:
            raise ValueError(f"clip has {clip.joints * 3} channels, model wants {self.motion_dim}")
        if clip.frames < self.config.downsample_total:
            raise ValueError(f"need at least {self.config.downsample_total} frames")
        if not standardized:
            clip = standardize(clip, self.stats)
        per_agent = []
        pad = 0
        for a in range(clip.agents):
            x, pad = self._pad_to_multiple(self._agent_channels(clip, a))
            latents = self.net.encode(constant(x[None])).data[0]    # [d, T']
            codes, _ = self.quantizer.quantize(latents.T)
            per_agent.append(codes)
        return EncodeResult(codes=np.stack(per_agent), pad_frames=pad,
                            frames=clip.frames, fps=clip.fps)

    # ---------------------------------------------------------------- decode

    def _codes_to_values(self, codes: np.ndarray) -> np.ndarray:
        """[T'] (or [T', depth]) -> latent values [T', d]."""
        return self.quantizer.dequantize(codes)

    def decode_plain(self, codes: np.ndarray, fps: float = 30.0,
                     trim_frames: int = None) -> MotionClip:
        """Deterministic reconstruction through the Stage-1 decoder."""
        codes = np.asarray(codes)
        if codes.ndim == 1 or (codes.ndim == 2 and self.quantizer.codes_per_step > 1):
            codes = codes[None]
        if codes.shape[-1 if self.quantizer.codes_per_step == 1 else -2] == 0:
            raise ValueError("empty code sequence")
        agents = []
        for agent_codes in codes:
            values = self._codes_to_values(agent_codes)             # [T', d]
            recon = self.net.decode(constant(values.T[None])).data[0]   # [C, T]
            agents.append(recon.T)                                  # [T, C]
        out = np.stack(agents, axis=1)                              # [T, A, C]
        t = out.shape[0] if trim_frames is None else trim_frames
        clip = MotionClip(positions=out[:t].reshape(t, len(codes), -1, 3), fps=fps)
        return destandardize(clip, self.stats)

    def flow_decode(self, codes: np.ndarray, steps: int = None, seed: int = 0,
                    fps: float = 30.0, trim_frames: int = None,
                    predictor=None) -> MotionClip:
        """Iterative refinement from Gaussian noise, conditioned on codes.

        Walks the shifted schedule from t=1 to 0 taking x += lambda_k * v_hat
        with lambda_k = (t_k - t_{k-1}) / t_k; the final step has lambda 1.
        `predictor(x, values, t) -> v` overrides the trained network (used
        by the analytic-oracle tests).
        """
        if self.flow is None and predictor is None:
            raise ValueError("flow decoder not trained")
        codes = np.asarray(codes)
        if codes.ndim == 1 or (codes.ndim == 2 and self.quantizer.codes_per_step > 1):
            codes = codes[None]
        steps = steps or self.config.inference_steps
        times = self.schedule.inference_times(steps)
        rng = np.random.default_rng([seed, 303])
        agents = []
        for agent_codes in codes:
            values = self._codes_to_values(agent_codes)             # [T', d]
            t_frames = values.shape[0] * self.config.downsample_total
            x = rng.normal(0.0, 1.0, size=(t_frames, self.motion_dim))
            for k in range(steps, 0, -1):
                t_k, t_prev = times[k], times[k - 1]
                if predictor is not None:
                    v = predictor(x, values, t_k)
                else:
                    v = self.flow.forward(constant(x[None]), constant(values[None]),
                                          np.array([t_k])).data[0]
                lam = (t_k - t_prev) / t_k
                x = x + lam * v
            agents.append(x)
        out = np.stack(agents, axis=1)
        t = out.shape[0] if trim_frames is None else trim_frames
        clip = MotionClip(positions=out[:t].reshape(t, len(codes), -1, 3), fps=fps)
        return destandardize(clip, self.stats)

    # ------------------------------------------------------------ checkpoint

    def stage1_digest(self) -> str:
        arrays = {k: p.data for k, p in self.net.params().items()}
        for i, ent in enumerate(self.quantizer.state_entries()):
            arrays[f"quantizer.{i}"] = ent
        return params_digest(arrays)

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = {
            "config": self.config.to_dict(),
            "motion_dim": self.motion_dim,
            "stats": self.stats.to_dict(),
            "has_flow": self.flow is not None,
        }
        (out / "tokenizer.json").write_text(json.dumps(meta, indent=1, sort_keys=True),
                                            encoding="utf-8")
        save_params({k: p.data for k, p in self.net.params().items()},
                    out / "stage1.mprm")
        entries = self.quantizer.state_entries()
        if entries:
            save_codebooks(entries, out / "codebooks.mqcb")
        if self.flow is not None:
            save_params({k: p.data for k, p in self.flow.params().items()},
                        out / "flow.mprm")

    @classmethod
    def load(cls, out_dir) -> "FlowVqModel":
        out = Path(out_dir)
        meta = json.loads((out / "tokenizer.json").read_text(encoding="utf-8"))
        config = FlowVqConfig.from_dict(meta["config"])
        stats = StandardizationStats.from_dict(meta["stats"])
        model = cls(config, meta["motion_dim"], stats)
        loaded = load_params(out / "stage1.mprm")
        for k, p in model.net.params().items():
            p.data[...] = loaded[k]
        if (out / "codebooks.mqcb").exists():
            model.quantizer.load_entries(load_codebooks(out / "codebooks.mqcb"))
        if meta["has_flow"]:
            model.init_flow()
            loaded = load_params(out / "flow.mprm")
            for k, p in model.flow.params().items():
                p.data[...] = loaded[k]
        return model
